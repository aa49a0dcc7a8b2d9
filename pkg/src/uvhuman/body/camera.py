"""Pinhole camera: intrinsics plus world-to-camera extrinsics.

Convention: camera x right, y down, z forward (x_cam = R @ x_world + t).
Pixel (row i, col j) uses its center (j + 0.5, i + 0.5).
"""

from __future__ import annotations

import numpy as np


class Camera:
    def __init__(self, fx, fy, cx, cy, width, height, rot, trans):
        self.fx, self.fy, self.cx, self.cy = float(fx), float(fy), float(cx), float(cy)
        self.width, self.height = int(width), int(height)
        self.rot = np.asarray(rot, dtype=np.float64).reshape(3, 3)
        self.trans = np.asarray(trans, dtype=np.float64).reshape(3)

    @property
    def position(self):
        return -self.rot.T @ self.trans

    @property
    def forward(self):
        return self.rot[2]

    def pixel_rays(self):
        """World-space ray origins (H*W, 3) and unit directions (H*W, 3), row-major."""
        j, i = np.meshgrid(np.arange(self.width), np.arange(self.height))
        x = (j.ravel() + 0.5 - self.cx) / self.fx
        y = (i.ravel() + 0.5 - self.cy) / self.fy
        d_cam = np.stack([x, y, np.ones_like(x)], axis=1)
        d = d_cam @ self.rot                      # R^T applied row-wise
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        o = np.broadcast_to(self.position, d.shape).copy()
        return o, d

    def resize(self, width, height):
        """Same field of view at a different resolution."""
        sx, sy = width / self.width, height / self.height
        return Camera(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy,
                      width, height, self.rot, self.trans)

    def to_dict(self):
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
            "rot": self.rot.tolist(), "trans": self.trans.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return Camera(d["fx"], d["fy"], d["cx"], d["cy"], d["width"], d["height"],
                      d["rot"], d["trans"])


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    """World-to-camera rotation/translation looking from eye toward target."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    nr = np.linalg.norm(right)
    if nr < 1e-9:
        right = np.cross(fwd, [0.0, 1.0, 0.0])
        nr = np.linalg.norm(right)
    right /= nr
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd])
    return rot, -rot @ eye


def ring_camera(index, count, radius=2.6, height=0.9, target=(0.0, 0.0, 0.85),
                fov_deg=45.0, width=64, img_height=64):
    """Camera number `index` of an evenly spaced horizontal ring."""
    ang = 2.0 * np.pi * index / count
    eye = np.array([radius * np.sin(ang), -radius * np.cos(ang), height])
    rot, trans = look_at(eye, target)
    f = 0.5 * width / np.tan(0.5 * np.deg2rad(fov_deg))
    return Camera(f, f, 0.5 * width, 0.5 * img_height, width, img_height, rot, trans)
