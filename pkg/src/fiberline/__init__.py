"""Fiber-line extraction for bivariate 2D scalar fields on triangle meshes.

A fiber line is the preimage of a control polygon drawn in a field's value
space.  The package provides the exact extraction kernel, four
candidate-search strategies with full instrumentation (naive, single-BVH,
dual-BVH, hybrid), a benchmark harness, a CLI, and an HTTP service for
interactive clients.
"""

from .bvh import (
    Bvh,
    BvhNode,
    ControlPolygon,
    build_cells,
    build_domain_cells,
    build_edges,
    gen_polygon,
    load_polygon,
    save_polygon,
)
from .extraction import (
    DomainSegment,
    FiberLineSet,
    extract_all,
    extract_isoline,
    extract_pair,
)
from .field import (
    BivariateField,
    CellImage,
    FieldFormatError,
    FieldValidationError,
    cell_image,
    evaluate,
    gen_double_gyre,
    identity_field,
    load_field,
    sample_grid,
    save_field,
)
from .geometry import (
    Aabb,
    Segment,
    aabb_of_segment,
    aabb_of_triangle,
    aabb_overlap,
    edge_parameter,
    segment_aabb_intersects,
    signed_distance,
)
from .pipeline import (
    ImagePolyline,
    QueryResult,
    field_equivalence,
    fiber_round_trip_max_distance,
    fiber_sets_equal,
    image_of_domain_polyline,
    isoline_fscp,
    run_query,
)
from .traversal import (
    CandidateList,
    QueryStats,
    SearchConfig,
    recursion_decide,
    search_dual,
    search_hybrid,
    search_naive,
    search_single,
)

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "BivariateField",
    "Bvh",
    "BvhNode",
    "CandidateList",
    "CellImage",
    "ControlPolygon",
    "DomainSegment",
    "FiberLineSet",
    "FieldFormatError",
    "FieldValidationError",
    "ImagePolyline",
    "QueryResult",
    "QueryStats",
    "SearchConfig",
    "Segment",
    "aabb_of_segment",
    "aabb_of_triangle",
    "aabb_overlap",
    "build_cells",
    "build_domain_cells",
    "build_edges",
    "cell_image",
    "edge_parameter",
    "evaluate",
    "extract_all",
    "extract_isoline",
    "extract_pair",
    "field_equivalence",
    "fiber_round_trip_max_distance",
    "fiber_sets_equal",
    "gen_double_gyre",
    "gen_polygon",
    "identity_field",
    "image_of_domain_polyline",
    "isoline_fscp",
    "load_field",
    "load_polygon",
    "recursion_decide",
    "run_query",
    "sample_grid",
    "save_field",
    "save_polygon",
    "search_dual",
    "search_hybrid",
    "search_naive",
    "search_single",
    "segment_aabb_intersects",
    "signed_distance",
    "__version__",
]
