"""Articulated capsule humanoid: template mesh, skinning, queries, cameras."""

from .camera import Camera, look_at, ring_camera
from .humanoid import (
    HEIGHT,
    N_PARTS,
    PART_NAMES,
    PARENTS,
    UV_CHARTS,
    ShapeParams,
    TemplateBody,
    build_body,
    export_obj,
)
from .meshquery import (
    FaceHit,
    capsule_contains,
    nearest_faces,
    nearest_faces_brute,
    query_skin_weights,
    template_distance,
)
from .skinning import (
    SkeletonPose,
    blend_transforms,
    bone_transforms,
    forward_lbs,
    inverse_lbs,
    pose_vertices,
    rodrigues,
)

__all__ = [
    "Camera", "look_at", "ring_camera",
    "HEIGHT", "N_PARTS", "PART_NAMES", "PARENTS", "UV_CHARTS",
    "ShapeParams", "TemplateBody", "build_body", "export_obj",
    "FaceHit", "capsule_contains", "nearest_faces", "nearest_faces_brute",
    "query_skin_weights", "template_distance",
    "SkeletonPose", "blend_transforms", "bone_transforms",
    "forward_lbs", "inverse_lbs", "pose_vertices", "rodrigues",
]
