"""Dataset generation and the JSON manifest that indexes it."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..body import SkeletonPose, ShapeParams, build_body, ring_camera
from ..body.camera import Camera
from .images import load_png, save_png
from .synthetic import SyntheticIdentity, make_identity, render_reference, sample_pose


class FrameRecord:
    def __init__(self, ident, view, pose_idx, pose, camera, path):
        self.ident = int(ident)
        self.view = int(view)
        self.pose_idx = int(pose_idx)
        self.pose = pose
        self.camera = camera
        self.path = path

    def to_dict(self):
        return {
            "ident": self.ident, "view": self.view, "pose_idx": self.pose_idx,
            "theta": self.pose.theta.tolist(),
            "root_rot": self.pose.root_rot.tolist(),
            "root_trans": self.pose.root_trans.tolist(),
            "camera": self.camera.to_dict(), "path": self.path,
        }

    @staticmethod
    def from_dict(d):
        pose = SkeletonPose(np.asarray(d["theta"]), np.asarray(d["root_rot"]),
                            np.asarray(d["root_trans"]))
        return FrameRecord(d["ident"], d["view"], d["pose_idx"], pose,
                           Camera.from_dict(d["camera"]), d["path"])


class DatasetManifest:
    """Everything needed to re-load a generated dataset."""

    def __init__(self, root, seed, resolution, identities, frames):
        self.root = root
        self.seed = int(seed)
        self.resolution = int(resolution)
        self.identities = identities          # list[SyntheticIdentity]
        self.frames = frames                  # list[FrameRecord]

    def identity(self, ident):
        for sid in self.identities:
            if sid.ident == ident:
                return sid
        raise KeyError(f"identity {ident} not in manifest")

    def frames_of(self, ident):
        return [f for f in self.frames if f.ident == ident]

    def load_image(self, frame):
        return load_png(os.path.join(self.root, frame.path))

    def save(self, path=None):
        path = path or os.path.join(self.root, "manifest.json")
        doc = {
            "seed": self.seed, "resolution": self.resolution,
            "identities": [s.to_dict() for s in self.identities],
            "frames": [f.to_dict() for f in self.frames],
        }
        with open(path, "w") as f:
            json.dump(doc, f, indent=1, sort_keys=True)
        return path

    @staticmethod
    def load(path):
        with open(path) as f:
            doc = json.load(f)
        root = os.path.dirname(os.path.abspath(path))
        return DatasetManifest(
            root, doc["seed"], doc["resolution"],
            [SyntheticIdentity.from_dict(d) for d in doc["identities"]],
            [FrameRecord.from_dict(d) for d in doc["frames"]])


def generate_dataset(root, n_ids, n_views, n_poses, resolution=64, seed=0,
                     workers=1, supersample=2):
    """Render a ring-camera multi-view dataset of synthetic identities.

    Frame order (and every random draw) is fixed by `seed`: identity genomes
    derive from (seed, ident) and poses from (seed, ident, pose index), so
    regenerating with the same arguments is byte-identical. Pose 0 is always
    the canonical rest pose.
    """
    os.makedirs(root, exist_ok=True)
    identities = [make_identity(seed, i) for i in range(n_ids)]
    frames = []
    jobs = []
    for sid in identities:
        body = build_body(sid.beta)
        for p in range(n_poses):
            rng = np.random.default_rng([int(seed), sid.ident, p])
            pose = sample_pose(rng, canonical=(p == 0))
            for v in range(n_views):
                cam = ring_camera(v, n_views, width=resolution, img_height=resolution)
                rel = os.path.join(f"id{sid.ident:04d}", f"f{p * n_views + v:04d}.png")
                frames.append(FrameRecord(sid.ident, v, p, pose, cam, rel))
                jobs.append((sid, body, pose, cam, os.path.join(root, rel)))

    def run(job):
        sid, body, pose, cam, path = job
        save_png(path, render_reference(sid, pose, cam, supersample, body=body))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, jobs))
    else:
        for job in jobs:
            run(job)

    manifest = DatasetManifest(root, seed, resolution, identities, frames)
    manifest.save()
    return manifest
