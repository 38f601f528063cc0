"""Numerical oscillation theory for (v z')' + A v z = 0 on a half-line."""

from .coefficients import (CoefficientProfile, GrowthEnvelope, Jump, constant, envelope_profile,
                           exponential, from_table, make_model, make_potential, read_table)
from .critical import CriticalCurve, chi, chi_f, chi_tilde_f, log_tail_integral, tail_integral
from .criteria import (CriterionReport, first_zero_test, hille_nehari_gap, oscillation_test,
                       sufficient_conditions)
from .errors import OscillaError
from .gaps import GapRecord, gap_bound, gap_sweep, verify_gap_bound
from .spectral import (SpectralEstimate, fd_eigenvalue_oracle, index_lower_bound,
                       model_lower_bound, principale_constant, rayleigh_upper)
from .volterra import SolutionTrack, solve_ivp, sturm_compare

__version__ = "0.1.0"

__all__ = [
    "CoefficientProfile", "GrowthEnvelope", "Jump", "constant", "envelope_profile",
    "exponential", "from_table", "make_model", "make_potential", "read_table",
    "CriticalCurve", "chi", "chi_f", "chi_tilde_f", "log_tail_integral", "tail_integral",
    "CriterionReport", "first_zero_test", "hille_nehari_gap", "oscillation_test",
    "sufficient_conditions", "OscillaError", "GapRecord", "gap_bound", "gap_sweep",
    "verify_gap_bound", "SpectralEstimate", "fd_eigenvalue_oracle", "index_lower_bound",
    "model_lower_bound", "principale_constant", "rayleigh_upper", "SolutionTrack",
    "solve_ivp", "sturm_compare",
]
