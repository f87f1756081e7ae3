"""scikit-learn style front-ends for the reconstruction pipeline.

>>> from glauber_p import PFunctionReconstructor, StateModel, sample_quadratures
>>> data = sample_quadratures(StateModel(1.11, 0.60), 100_000, seed=42)
>>> rec = PFunctionReconstructor(cutoff=2.8).fit(data.samples)
>>> rec.report_.significance > 3
True
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_quadratures, check_radial
from .analysis import build_report, fit_arrays, fit_cf
from .estimation import DEFAULT_B_GRID, estimate_cf
from .numerics import Grid1D
from .reconstruction import hankel_transform, reconstruct
from .states import StateModel, model_cf

__all__ = [
    "CharacteristicFunctionEstimator",
    "StateModelRegressor",
    "PFunctionReconstructor",
]


def _b_grid(b_max, b_step):
    if b_max == DEFAULT_B_GRID.stop and b_step == DEFAULT_B_GRID.step:
        return DEFAULT_B_GRID
    return Grid1D.from_range(0.0, b_max, b_step)


class CharacteristicFunctionEstimator(BaseEstimator):
    """Empirical P-function characteristic function of quadrature data.

    Parameters
    ----------
    b_max, b_step : float
        Radial grid ``0 .. b_max`` in ``|beta|``.
    cutoff : float, "auto" or None
        Fixed cutoff, threshold rule, or no cutoff.
    k_sigma, window : float
        Threshold rule: ``|phi| < k_sigma * sigma`` over ``window``.

    Attributes
    ----------
    cf_ : CfEstimate
    cutoff_ : float or None
    n_samples_ : int
    """

    def __init__(self, b_max=4.0, b_step=0.01, cutoff="auto", k_sigma=1.0, window=0.25):
        self.b_max = b_max
        self.b_step = b_step
        self.cutoff = cutoff
        self.k_sigma = k_sigma
        self.window = window

    def fit(self, X, y=None):
        self.cf_ = estimate_cf(
            X,
            _b_grid(self.b_max, self.b_step),
            cutoff=self.cutoff,
            k_sigma=self.k_sigma,
            window=self.window,
        )
        self.cutoff_ = self.cf_.cutoff
        self.n_samples_ = self.cf_.n
        return self

    def transform(self, X=None):
        """Columns ``b, phi_re, phi_im, sigma`` of the fitted estimate."""
        check_is_fitted(self, "cf_")
        cf = self.cf_
        return np.column_stack([cf.b, cf.phi_re, cf.phi_im, cf.sigma])


class StateModelRegressor(RegressorMixin, BaseEstimator):
    """Weighted least-squares fit of the state model to a characteristic
    function sampled at radii ``X`` with values ``y``.

    ``sample_weight`` plays the role of ``1 / sigma^2``; zero-weight points
    are skipped. With ``fit_w`` the efficiency is held at ``initial_eta``.
    """

    def __init__(self, initial_nbar=1.0, initial_eta=0.5, initial_w=1.0, fit_w=False):
        self.initial_nbar = initial_nbar
        self.initial_eta = initial_eta
        self.initial_w = initial_w
        self.fit_w = fit_w

    def fit(self, X, y, sample_weight=None):
        b = check_radial(X, "b")
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != b.shape:
            raise ValueError("X and y have different lengths")
        weight = np.ones_like(b) if sample_weight is None else np.asarray(sample_weight, float)
        keep = weight > 0
        initial = StateModel(self.initial_nbar, self.initial_eta, self.initial_w)
        self.fit_result_ = fit_arrays(
            b[keep], y[keep], 1.0 / np.sqrt(weight[keep]), initial, fit_w=self.fit_w
        )
        self.model_ = self.fit_result_.model
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return model_cf(check_radial(X, "b"), self.model_)


class PFunctionReconstructor(BaseEstimator):
    """Quadrature samples in, P function with error bars and a
    nonclassicality report out.

    Parameters
    ----------
    cutoff : float or "auto"
        Integration cutoff in ``|beta|``.
    k_sigma_cutoff : float
        Threshold used when ``cutoff="auto"``.
    b_max, b_step : float
        Grid of the characteristic-function estimate.
    alpha_max, alpha_step : float
        Radial grid of the reconstruction.
    variance_step : float
        Grid step of the double integral for ``sigma_p``.
    fit_model : bool
        Fit the state model (needed for the systematic error).
    initial_nbar, initial_eta, initial_w, fit_w :
        Start point of the fit; with ``fit_w`` the efficiency stays fixed.
    significance_level : float
        Negativity is reported as significant at this many sigma.

    Attributes
    ----------
    cf_ : CfEstimate
    fit_result_ : FitResult or None
    p_estimate_ : PEstimate
    report_ : NonclassicalityReport
    """

    def __init__(
        self,
        cutoff=2.8,
        k_sigma_cutoff=1.0,
        b_max=4.0,
        b_step=0.01,
        alpha_max=3.0,
        alpha_step=0.02,
        variance_step=0.02,
        fit_model=True,
        initial_nbar=1.0,
        initial_eta=0.5,
        initial_w=1.0,
        fit_w=False,
        significance_level=3.0,
    ):
        self.cutoff = cutoff
        self.k_sigma_cutoff = k_sigma_cutoff
        self.b_max = b_max
        self.b_step = b_step
        self.alpha_max = alpha_max
        self.alpha_step = alpha_step
        self.variance_step = variance_step
        self.fit_model = fit_model
        self.initial_nbar = initial_nbar
        self.initial_eta = initial_eta
        self.initial_w = initial_w
        self.fit_w = fit_w
        self.significance_level = significance_level

    def fit(self, X, y=None):
        as_quadratures(X, min_samples=2)
        self.cf_ = estimate_cf(
            X, _b_grid(self.b_max, self.b_step), cutoff=self.cutoff, k_sigma=self.k_sigma_cutoff
        )
        self.fit_result_ = None
        if self.fit_model:
            initial = StateModel(self.initial_nbar, self.initial_eta, self.initial_w)
            self.fit_result_ = fit_cf(self.cf_, initial, fit_w=self.fit_w)
        alpha_grid = Grid1D.from_range(0.0, self.alpha_max, self.alpha_step)
        self.p_estimate_ = reconstruct(
            self.cf_,
            alpha_grid,
            fitted=None if self.fit_result_ is None else self.fit_result_.model,
            variance_step=self.variance_step,
        )
        self.report_ = build_report(
            self.cf_, self.p_estimate_, self.fit_result_, k_sigma=self.significance_level
        )
        return self

    def predict(self, X):
        """Reconstructed P at arbitrary ``|alpha|`` (evaluated directly, not
        interpolated)."""
        check_is_fitted(self, "cf_")
        alpha = check_radial(X)
        k = self.cf_.cutoff_index
        grid = Grid1D(0.0, self.cf_.grid.step, k + 1)
        return hankel_transform(self.cf_.phi_re[: k + 1], grid, alpha)
