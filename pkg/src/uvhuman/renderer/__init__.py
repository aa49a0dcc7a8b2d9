"""Volumetric feature renderer and the global style mixer."""

from .frame import (
    FEATURE_CHANNELS,
    N_SAMPLES,
    FeatureImage,
    FrameGeometry,
    background_feature,
    frame_geometry,
    render_features,
)
from .quadrature import composite_ray, stratified_samples
from .rays import RayBatch, box_ray_range, make_rays
from .stylemix import init_mixer_params, style_mix
from .surface import blended_sdf, render_normal_depth

__all__ = [
    "FEATURE_CHANNELS",
    "N_SAMPLES",
    "FeatureImage",
    "FrameGeometry",
    "RayBatch",
    "background_feature",
    "blended_sdf",
    "box_ray_range",
    "composite_ray",
    "frame_geometry",
    "init_mixer_params",
    "make_rays",
    "render_features",
    "render_normal_depth",
    "stratified_samples",
    "style_mix",
]
