"""Satellite photogrammetry toolkit: RPC cameras, per-pixel world maps,
bias-correction bundle adjustment, ground-truth matching, and evaluation."""

__version__ = "0.1.0"

from .geodesy import (
    EcefPoint,
    GeoPoint,
    GeoTransform,
    RasterGrid,
    UtmPoint,
    ecef_to_geo,
    geo_to_ecef,
    geo_to_pixel,
    geo_to_utm,
    pixel_to_geo,
    sample_bilinear,
    utm_to_geo,
)
from .maps import DepthMap, make_depth_map, read_depth_map, write_depth_map
from .rpc import (
    AffineCamera,
    AffineFundamental,
    RpcModel,
    affine_approx,
    affine_fundamental,
)

__all__ = [name for name in dir() if not name.startswith("_")]
