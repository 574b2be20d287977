"""Selections, histograms, data/MC comparison and eta-phi images."""

from .histogram import (
    ComparisonReport,
    Histogram1D,
    bin_index,
    compare_data_mc,
    fill_histogram,
    histogram_quantity,
    multiplicity_histogram,
    normalize_to_unity,
    object_counts,
    uniform_edges,
)
from .image import EtaPhiImage, eta_phi_image, in_range_pt
from .quantities import ABSENT, REGISTRY, evaluate_quantity, known_quantities, quantity_values
from .selection import (
    W_SELECTION,
    Cut,
    Cutflow,
    CutflowRow,
    SelectionSpec,
    apply_selection,
    load_selection,
    parse_selection,
)
from .svg import render_svg

__all__ = [
    "ABSENT", "REGISTRY", "W_SELECTION", "ComparisonReport", "Cut", "Cutflow", "CutflowRow",
    "EtaPhiImage", "Histogram1D", "SelectionSpec", "apply_selection", "bin_index", "compare_data_mc",
    "eta_phi_image", "evaluate_quantity", "fill_histogram", "histogram_quantity", "in_range_pt",
    "known_quantities", "load_selection", "multiplicity_histogram", "normalize_to_unity",
    "object_counts", "parse_selection", "quantity_values", "render_svg", "uniform_edges",
]
