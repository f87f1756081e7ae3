"""Model fitting and nonclassicality verdicts."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .estimation import CfEstimate
from .reconstruction import PEstimate, normalization_check
from .states import StateModel

__all__ = [
    "FitResult",
    "NonclassicalityReport",
    "fit_cf",
    "fit_arrays",
    "negativity_significance",
    "cf_bound_criterion",
    "build_report",
]

_ETA_FLOOR = 1e-9


@dataclass(frozen=True)
class FitResult:
    model: StateModel
    residual: float
    dof: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "residual": self.residual,
            "dof": self.dof,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            StateModel.from_dict(d["model"]),
            float(d["residual"]),
            int(d["dof"]),
            bool(d["converged"]),
        )


def _fit_points(cf: CfEstimate):
    if cf.sigma is None:
        raise ValueError("fit needs sigma; run cf_variance first")
    if not np.any(cf.sigma > 0):
        raise ValueError("all standard deviations are zero; cannot weight the fit")
    stop = cf.grid.count if cf.cutoff is None else cf.cutoff_index + 1
    b = cf.b[:stop]
    sel = (b > 0) & (cf.sigma[:stop] > 0)
    if sel.sum() < 10:
        raise ValueError(f"only {int(sel.sum())} usable grid points inside the cutoff; need 10")
    return b[sel], cf.phi_re[:stop][sel], cf.sigma[:stop][sel]


def fit_cf(
    cf: CfEstimate,
    initial: StateModel,
    fit_w: bool = False,
    restarts: int = 3,
    max_cycles: int = 200,
    rtol: float = 1e-10,
) -> FitResult:
    """Weighted least-squares fit of :func:`~glauber_p.states.model_cf` to
    ``cf.phi_re`` on ``0 < b <= cutoff`` with weights ``1 / sigma^2``.

    See :func:`fit_arrays` for the parameterisation and stopping rule.
    """
    b, y, s = _fit_points(cf)
    return fit_arrays(b, y, s, initial, fit_w, restarts, max_cycles, rtol)


def fit_arrays(
    b: np.ndarray,
    y: np.ndarray,
    sigma: np.ndarray,
    initial: StateModel,
    fit_w: bool = False,
    restarts: int = 3,
    max_cycles: int = 200,
    rtol: float = 1e-10,
) -> FitResult:
    """Minimise ``sum(((y - model_cf(b)) / sigma)^2)`` by simplex descent.

    Without ``fit_w`` the free parameters are ``nbar`` and ``eta`` (``w`` is
    held at ``initial.w``). The characteristic function depends on them only
    through ``u = eta nbar`` and ``v = eta (1 + nbar)``, which are what the
    simplex moves. With ``fit_w`` the function depends on ``w`` only via
    ``w v``, so ``eta`` is held at ``initial.eta`` (an independently
    calibrated efficiency) and ``nbar``, ``w`` are fitted. Parameters are
    clamped into the model domain inside the objective.

    Nelder-Mead is re-run from its last best point until a full cycle
    improves the residual by less than ``rtol`` relatively; the best of
    ``restarts`` perturbed starts is kept.
    """
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not (b.shape == y.shape == sigma.shape):
        raise ValueError("b, y and sigma must have the same shape")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive at every fitted point")
    b2 = b**2
    inv_s = 1.0 / sigma
    eta0 = initial.eta

    if fit_w:

        def unpack(theta):
            u = max(theta[0], 0.0)
            w = min(max(theta[1], 0.0), 1.0)
            return u, u + eta0, w

        theta0 = np.array([eta0 * initial.nbar, initial.w])
    else:

        def unpack(theta):
            u = max(theta[0], 0.0)
            eta = min(max(theta[1] - u, _ETA_FLOOR), 1.0)
            return u, u + eta, initial.w

        theta0 = np.array([eta0 * initial.nbar, eta0 * (1 + initial.nbar)])

    def chi2(theta):
        u, v, w = unpack(theta)
        model = (1.0 - w * v * b2) * np.exp(-u * b2)
        r = (y - model) * inv_s
        return float(r @ r)

    def simplex_around(theta):
        scale = np.where(np.abs(theta) > 1e-8, 0.1 * np.abs(theta), 0.01)
        return np.vstack([theta, theta + np.diag(scale)])

    def descend(start):
        best = np.asarray(start, dtype=float)
        f_best = chi2(best)
        for _ in range(max_cycles):
            res = minimize(
                chi2,
                best,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex_around(best),
                    "xatol": 1e-13,
                    "fatol": 1e-300,
                    "maxiter": 4000,
                },
            )
            f_new = float(res.fun)
            improvement = max(f_best - f_new, 0.0)
            if f_new < f_best:
                best, f_best = res.x, f_new
            if improvement <= rtol * f_best + 1e-300:
                return best, f_best, True
        return best, f_best, False

    factors = [1.0, 0.8, 1.25, 0.9, 1.1][: max(1, restarts)]
    outcomes = [descend(theta0 * f) for f in factors]
    theta, resid, converged = min(outcomes, key=lambda o: o[1])
    u, v, w = unpack(theta)
    eta = eta0 if fit_w else v - u
    model = StateModel(nbar=u / eta, eta=eta, w=w)
    return FitResult(model, resid, b.size - theta.size, converged)


def negativity_significance(p_est: PEstimate) -> tuple[float, float, float]:
    """``(min_p, argmin_alpha, significance)`` with significance
    ``-min_p / sigma_p(argmin)`` when the minimum is negative, else 0."""
    if p_est.sigma_p is None:
        raise ValueError("sigma_p must be populated")
    i = int(np.argmin(p_est.p))
    min_p = float(p_est.p[i])
    argmin = float(p_est.alpha[i])
    if min_p >= 0:
        return min_p, argmin, 0.0
    sig = float(p_est.sigma_p[i])
    return min_p, argmin, (math.inf if sig == 0 else -min_p / sig)


def cf_bound_criterion(cf: CfEstimate, k_sigma: float = 3.0) -> bool:
    """True when ``|phi_re(b)| - k_sigma sigma(b) > 1`` at some grid point
    up to the cutoff, a significant violation of ``|Phi| <= 1``."""
    if cf.sigma is None:
        raise ValueError("sigma must be populated")
    stop = cf.grid.count if cf.cutoff is None else cf.cutoff_index + 1
    excess = np.abs(cf.phi_re[:stop]) - k_sigma * cf.sigma[:stop]
    return bool(np.any(excess > 1.0))


@dataclass(frozen=True)
class NonclassicalityReport:
    """Verdicts of one pipeline run.

    ``nonclassical`` is ``significance >= k_sigma``; ``delta_at_min`` is the
    signed systematic error at the minimum and is not folded into the
    significance.
    """

    min_p: float
    argmin_alpha: float
    significance: float
    delta_at_min: float | None
    cf_bound_violated: bool
    normalization: float
    fit: FitResult | None
    cutoff: float
    n: int
    k_sigma: float = 3.0

    @property
    def nonclassical(self) -> bool:
        return self.significance >= self.k_sigma

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit"] = None if self.fit is None else self.fit.to_dict()
        d["nonclassical"] = self.nonclassical
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NonclassicalityReport":
        d = dict(d)
        d.pop("nonclassical", None)
        fit = d.pop("fit")
        return cls(fit=None if fit is None else FitResult.from_dict(fit), **d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NonclassicalityReport":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "NonclassicalityReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def summary(self) -> str:
        lines = [
            f"samples N            : {self.n}",
            f"cutoff |beta|_c      : {self.cutoff:g}",
            f"min P                : {self.min_p:.5g} at |alpha| = {self.argmin_alpha:g}",
            f"negativity           : {self.significance:.2f} sigma"
            f" ({'significant' if self.nonclassical else 'not significant'}"
            f" at {self.k_sigma:g} sigma)",
        ]
        if self.delta_at_min is not None:
            lines.append(f"systematic error     : {self.delta_at_min:+.3g} at the minimum")
        lines.append(f"|Phi| <= 1 violated  : {'yes' if self.cf_bound_violated else 'no'}")
        lines.append(f"normalization        : {self.normalization:.4f}")
        if self.fit is not None:
            m = self.fit.model
            lines.append(
                f"fit                  : nbar={m.nbar:.4f} eta={m.eta:.4f} w={m.w:.4f}"
                f" chi2/dof={self.fit.residual / max(self.fit.dof, 1):.3f}"
            )
        return "\n".join(lines)


def build_report(
    cf: CfEstimate,
    p_est: PEstimate,
    fit: FitResult | None,
    k_sigma: float = 3.0,
) -> NonclassicalityReport:
    """Collect the verdicts of one run; ``cf`` and ``p_est`` must come from
    the same dataset."""
    if cf.n != p_est.n or (
        cf.source is not None and p_est.source is not None and cf.source != p_est.source
    ):
        raise ValueError("characteristic function and P estimate come from different datasets")
    min_p, argmin, significance = negativity_significance(p_est)
    delta = None
    if p_est.delta_p is not None:
        delta = float(p_est.delta_p[p_est.alpha_grid.index_of(argmin)])
    return NonclassicalityReport(
        min_p=min_p,
        argmin_alpha=argmin,
        significance=significance,
        delta_at_min=delta,
        cf_bound_violated=cf_bound_criterion(cf, k_sigma),
        normalization=normalization_check(p_est),
        fit=fit,
        cutoff=p_est.cutoff,
        n=p_est.n,
        k_sigma=k_sigma,
    )
