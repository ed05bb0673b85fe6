from .dtw import dtw_distance, frame_cost_matrix
from .score import (
    AbxReport,
    CellScore,
    ModeReport,
    evaluate_abx,
    evaluate_abx_on_features,
    score_abx,
    worker_count,
)
from .task import (
    MODES,
    AbxTriple,
    Cell,
    build_cells,
    build_segments,
    enumerate_triples,
    sample_cell_triples,
)

__all__ = [
    "dtw_distance",
    "frame_cost_matrix",
    "AbxReport",
    "CellScore",
    "ModeReport",
    "evaluate_abx",
    "evaluate_abx_on_features",
    "score_abx",
    "worker_count",
    "MODES",
    "AbxTriple",
    "Cell",
    "build_cells",
    "build_segments",
    "enumerate_triples",
    "sample_cell_triples",
]
