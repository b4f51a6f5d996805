"""Simulation and analysis of two-source heralded-photon Hong-Ou-Mandel interference."""
from .detector import ThresholdDetector, click_probability, thin
from .dipfit import DipData, DipFitResult, coupler_corrected_visibility, fit_dip
from .experiment import (
    CoincidenceReport,
    ExperimentConfig,
    fourfold_rate,
    multifold_rate,
    p_interfering,
    p_noninterfering,
    run_exact,
    visibility_multipair,
)
from .fock import BeamSplitter, PureState, apply_beamsplitter, fock_state, projection_probability, tensor
from .montecarlo import CountRecord, TrialPlan, estimate_visibility, simulate
from .source import HeraldedState, PairSource, Statistics, herald, sample_pair_count, two_mode_state
from .spectral import (
    GaussianFilter,
    PumpPulse,
    WavelengthTriple,
    check_energy_conservation,
    dip_profile,
    fwm_visibility,
    pdc_visibility,
    visibility_by_quadrature,
    wavelength_filter_to_sigma,
)

__version__ = "0.1.0"
