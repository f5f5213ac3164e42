"""Fermi coordinates for a comoving observer in k = 0 and k = -1 Robertson-Walker spacetimes."""

from .chart import (ChartContext, CurvaturePoint, FermiPoint, SigmaParam, chi_horizon, chi_t0,
                    chi_t0_gap_bound, from_fermi, geodesic_point, in_chart, max_radius, proper_length,
                    sigma_from_rho, to_fermi)
from .errors import (BeyondHorizonError, ConvergenceError, DivergentIntegralError, DomainError,
                     FermiChartError, IntegrandError, NoRootError, NotRegularError, OutOfChartError,
                     RangeError)
from .kinematics import (Regime, VelocitySample, classify_speeds, distance_sandwich,
                         hubble_decomposition, v_fermi_comoving, v_kin_comoving)
from .metric import (GttForm, GttForms, MetricSample, SkValue, cartesian_metric, dchi_dtau, g_tau_tau,
                     jacobian, lambda_k, lambda_k_limit, line_element, sk)
from .numerics import OPEN, DEFAULT_TOL, QuadResult, Tolerances, integrate_smooth, integrate_tail
from .scalefactor import (LambdaFluid, LogModel, PowerLaw, RegularityReport, Sinh, Tabulated,
                          builtin_models, deceleration, evaluate, hubble, inverse, load_model, milne,
                          model_from_spec, q_from_densities, regularity_check, sample_model)

__version__ = "0.1.0"
