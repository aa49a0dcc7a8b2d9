"""Compositional local neural fields on the articulated template."""

from .blend import blend_eval, blended_query, box_memberships
from .density import DensityParams, sdf_to_density
from .localfield import FieldConfig, init_field_params, query_local
from .window import DEFAULT_M, DEFAULT_N, WindowParams, box_coords, window_weight

__all__ = [
    "DEFAULT_M",
    "DEFAULT_N",
    "DensityParams",
    "FieldConfig",
    "WindowParams",
    "blend_eval",
    "blended_query",
    "box_coords",
    "box_memberships",
    "init_field_params",
    "query_local",
    "sdf_to_density",
    "window_weight",
]
