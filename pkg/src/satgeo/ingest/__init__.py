"""Parsers and serializers for every on-disk artifact the pipeline touches."""

from .imd import ImdParseError, ImdRecord, parse_imd, read_imd
from .rasters import (
    RasterFormatError,
    read_grd,
    read_raster,
    read_tiff,
    write_grd,
    write_raster,
    write_tiff,
)
from .rpb import (
    COEFF_FIELDS,
    SCALAR_FIELDS,
    RpbDocument,
    RpbParseError,
    parse_rpb,
    read_rpb,
    serialize_rpb,
    write_rpb,
)
from .tables import (
    ANNOTATION_HEADER,
    STATUS_ANNOTATED,
    STATUS_CANNOT,
    AnnotationRecord,
    GcpRecord,
    MatchRecord,
    PairRecord,
    TableFormatError,
    append_annotation,
    parse_annotations,
    parse_gcps,
    parse_matches,
    parse_pairs,
    read_annotations,
    read_biases,
    read_gcps,
    read_matches,
    read_pairs,
    serialize_annotations,
    serialize_matches,
    write_annotations,
    write_biases,
    write_gcps,
    write_matches,
    write_pairs,
)

__all__ = [name for name in dir() if not name.startswith("_")]
