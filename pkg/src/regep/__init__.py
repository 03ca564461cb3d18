"""Regularized e-processes and e-possibilistic inference on parameter grids."""

from .calibration import (Calibrator, admissibility_residual, beta_mixture_calibrator,
                          reciprocal_density_calibrator, validate)
from .eprocess import (WARE_COUNTS, Counts, Dataset, EProcess, RegularizedEProcess, composite_test,
                       confidence_region, fixed, horizon, median_quasi_eprocess, regularize,
                       savage_dickey_gaussian, savage_dickey_quadrature_oracle, threshold, ware_binomial)
from .im import (IMContour, decision_bound_check, im_contour, im_upper_lower,
                 marginal_expectation_interval, optimal_action, squared_error, upper_expected_loss)
from .possibility import (Contour, Grid, Grid2D, choquet_lower_expectation, choquet_upper_expectation,
                          credal_membership, extension_marginal, lower_probability, make_prior,
                          normal_sampler, point_mass, prob_to_possibility, upper_probability)
from .regularization import (PriorModel, Regularizer, finite_support_regularizer,
                             regularizer_from_contour, upper_expectation_under, vacuous)
from .special import lower_incomplete_gamma
from .two_arm import two_arm_analysis
from .validity_sim import (SimConfig, run_contraction_check, run_decision_bound_check,
                           run_expectation_check, run_growth_curve, run_ville_check)

__version__ = "0.1.0"
