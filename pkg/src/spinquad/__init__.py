"""Phase-space simulation of light-spin quadrature transfer and its readout."""

from .benchmark import (
    BenchmarkParams,
    GaussianChannel,
    MeasureAndPrepare,
    Verdict,
    average_fidelity,
    classical_bound,
    criterion_report,
    delta_bound,
    mean_square_deviation,
)
from .core import (
    LIGHT,
    LIGHT_SPIN,
    SPIN,
    GaussianState,
    InvariantError,
    ModeLayout,
    NumericPolicy,
    SymplecticMap,
    apply_map,
    coherent_state,
    compose,
    vacuum_state,
)
from .interactions import HomodyneSetting, PassSpec, fr_pass, homodyne_sample
from .samples import SampleSet
from .schemes import (
    FMPS,
    SchemeConfig,
    StokesRotation,
    folded_scheme_search,
    husimi_acquisition,
    three_pass_swap_map,
    tomography_scan,
    two_pass_transducer_map,
)
from .tomography import GridSpec, ReconGrid, build_sinogram, fbp_reconstruct, husimi_estimate

__all__ = [
    "BenchmarkParams", "GaussianChannel", "MeasureAndPrepare", "Verdict", "average_fidelity",
    "classical_bound", "criterion_report", "delta_bound", "mean_square_deviation",
    "LIGHT", "LIGHT_SPIN", "SPIN", "GaussianState", "InvariantError", "ModeLayout", "NumericPolicy",
    "SymplecticMap", "apply_map", "coherent_state", "compose", "vacuum_state",
    "HomodyneSetting", "PassSpec", "fr_pass", "homodyne_sample", "SampleSet",
    "FMPS", "SchemeConfig", "StokesRotation", "folded_scheme_search", "husimi_acquisition",
    "three_pass_swap_map", "tomography_scan", "two_pass_transducer_map",
    "GridSpec", "ReconGrid", "build_sinogram", "fbp_reconstruct", "husimi_estimate",
]
