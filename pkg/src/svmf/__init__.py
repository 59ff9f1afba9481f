"""Visual molecular fingerprints built from substructure detections."""

from .catalog import Catalog, CatalogError, Kind, SubstructureClass, kind_of, load_catalog, reference_catalog, toy_catalog
from .detection import (
    BoundingBox,
    DetectionError,
    DetectionInstance,
    DetectionSet,
    boxes_overlap,
    dump_detections,
    expand_box,
    expansion_margin,
    filter_by_score,
    parse_detections,
)
from .evaluation import (
    EvalRecord,
    aggregate_detection_report,
    average_rank,
    molecule_exact_match,
    substructure_f1,
)
from .fingerprint import (
    SVMF,
    FormatError,
    Hyperparams,
    VersionError,
    compute_svmf,
    decode_svmf,
    encode_svmf,
    linear_index,
    nnz,
    svmf_from_matches,
)
from .graph import (
    DistanceTable,
    SubstructureGraph,
    all_pairs_distances_capped,
    build_graph,
    graph_from_edges,
    instance_distance,
)
from .retrieval import (
    ComparisonError,
    DuplicateKeyError,
    FingerprintIndex,
    RankedResult,
    index_add,
    index_load,
    index_save,
    rank_of,
    search,
    similarity,
)


def fingerprint_detections(dset, catalog, hp=None):
    """Detection set -> fingerprint, using ``hp.expansion_factor`` for the graph."""
    hp = hp or Hyperparams()
    return compute_svmf(build_graph(dset, hp.expansion_factor), catalog, hp)


__version__ = "0.1.0"
