"""Reconstruction of nonclassical Glauber-Sudarshan P functions from
balanced-homodyne quadrature data."""

from .analysis import (
    FitResult,
    NonclassicalityReport,
    build_report,
    cf_bound_criterion,
    fit_cf,
    negativity_significance,
)
from .estimation import CfEstimate, cf_variance, choose_cutoff, empirical_cf, estimate_cf
from .estimators import (
    CharacteristicFunctionEstimator,
    PFunctionReconstructor,
    StateModelRegressor,
)
from .homodyne_sim import (
    QuadratureDataset,
    load_dataset,
    sample_quadratures,
    sample_via_loss_channel,
    save_dataset,
)
from .numerics import Grid1D, bessel_j0, integrate_1d, integrate_2d, rng_stream
from .reconstruction import (
    PEstimate,
    hankel_reconstruct,
    normalization_check,
    p_variance,
    reconstruct,
    systematic_error,
)
from .states import (
    StateModel,
    measured_quadrature_pdf,
    model_cf,
    model_p,
    normally_ordered_moment,
    rescale_p_for_loss,
    spats_cf,
    spats_p,
    spats_photon_dist,
    thermal_p,
)

__version__ = "0.1.0"
