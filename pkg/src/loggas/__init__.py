"""Log-gas equilibrium measures and fluctuations of linear eigenvalue
statistics for beta ensembles, with Monte Carlo verification."""

__version__ = "0.1.0"

from .basis import Interval
from .chebops import (ChebSeries, MultiCutModel, apply_D, apply_L,
                      build_model, cheb_transform, entropy_integral,
                      nu_functional, pair, quad_form_barD, resolvent_G,
                      solve_psi)
from .equilibrium import (EquilibriumMeasure, ScaleMap, Support, compute_P,
                          density, effective_potential, energy,
                          gaussian_equilibrium, log_potential, masses,
                          rescale, solve_equilibrium, solve_support,
                          stieltjes)
from .errors import (AccuracyError, ConfigError, ConsistencyError,
                     DegeneracyError, DomainError, InsufficientDataError,
                     LogGasError, NoConvergenceError)
from .fluctuation import (CLTPrediction, ThetaParams, fractional_offsets,
                          multicut_logZ, multicut_mean_var, onecut_predict,
                          theta_eval, theta_log, theta_moments)
from .lemmas import KernelA, delta1_estimate, fourier_a, kernel_a
from .partition import (ExpansionReport, F_beta, b2_closed_forms, c_beta,
                        fit_c1, log_partition, onecut_local, r_beta,
                        selberg_log_partition, u0, u1)
from .potentials import (EllipseContour, GaussChebRule, Potential,
                         TestFunction, contour_integral, default_contour,
                         eval_potential, gaussian_reference, pv_integral)
from .sampler import (ChainConfig, EmpiricalStats, SampleBatch,
                      empirical_stats, gbe_batch, gbe_tridiag, mcmc_sample)
