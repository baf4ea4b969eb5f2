"""Random Fourier feature classification: sampling, leverage scores, ERM and rate experiments."""

from .diagnostics import (SpectrumReport, approximate_target, classify_decay, excess_risk, gram_spectrum,
                          local_rademacher_fixed_point, operator_approx_error)
from .erm import (Loss, SolverOptions, TrainedModel, classify, empirical_risk, predict, train_kernel, train_rff,
                  zero_one_risk)
from .errors import ConvergenceError, DegenerateProfileError, UnsupportedFamilyError
from .features import RandomFeatureMap, approx_kernel, build_plain, build_weighted, feature_matrix
from .kernels import (Frequencies, Frequency, KernelSpec, feature_eval, gram_matrix, kernel_eval, spectral_density,
                      spectral_sample)
from .leverage import LeverageProfile, build_profile, effective_dimension, empirical_leverage, feature_budget
from .synthdata import NoiseModel, SourceTarget, label, make_source_problem, make_spectrum_regime

__version__ = "0.1.0"
