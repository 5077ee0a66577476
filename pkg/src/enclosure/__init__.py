"""Enclosure-method recovery of the insulated endpoint of a heated rod."""

from .certification import (CertificationParams, FrequencyGrid, TrustedRegion, c_max, c_T, check_tau0,
                            empirical_region, n_t_threshold, tau_max, theorem_bounds, theoretical_region)
from .config import ExperimentConfig, parse_config
from .discretization import (QuadratureGrid, discrete_gap_bound, discrete_indicator, trapezoid,
                             trapezoid_error_bound)
from .errors import (ConfigError, DomainError, EnclosureError, InfeasibleError, MagnitudeError,
                     QuadratureError, RegularityError, SingularSourceError)
from .experiments import run_experiment
from .indicator import (IndicatorSample, a_infty_gap, indicator, indicator_exact_asymptotic,
                        laplace_transform, monomial_transform_constants, recover_a, u_hat_exact)
from .series import (DEFAULT_N, ExpMonomial, Generic, Geometry, Monomial, TraceSamples, b_coeff,
                     dirichlet_trace, dirichlet_trace_expmono, dirichlet_trace_generic,
                     dirichlet_trace_monomial, eigenvalue, sample_trace, truncation_bound_generic,
                     truncation_bound_monomial, zeta_even)

__version__ = "0.1.0"
