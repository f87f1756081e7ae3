"""Cutoff Hankel inversion of the characteristic function to the P function,
with the statistical standard deviation and the truncation (systematic)
error of the inversion.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimation import CfEstimate
from .numerics import Grid1D, bessel_j0, simpson_weights
from .states import StateModel, model_cf, model_p

__all__ = [
    "PEstimate",
    "DEFAULT_ALPHA_GRID",
    "hankel_transform",
    "hankel_reconstruct",
    "p_variance",
    "systematic_error",
    "normalization_check",
    "reconstruct",
]

DEFAULT_ALPHA_GRID = Grid1D(0.0, 0.02, 151)
VARIANCE_STEP = 0.02
TAIL_STEP = 0.01
_TAIL_LIMIT = 60.0


@dataclass
class PEstimate:
    """Reconstructed P function on ``alpha_grid``.

    ``sigma_p`` is the statistical standard deviation, ``delta_p`` the signed
    truncation error computed from a fitted model (``None`` until one is
    supplied). ``source`` is the fingerprint of the originating dataset.
    """

    alpha_grid: Grid1D
    p: np.ndarray
    cutoff: float
    n: int
    sigma_p: np.ndarray | None = None
    delta_p: np.ndarray | None = None
    source: str | None = None
    fitted: StateModel | None = None

    @property
    def alpha(self) -> np.ndarray:
        return self.alpha_grid.points

    def metadata(self) -> dict:
        return {
            "alpha_grid": self.alpha_grid.to_dict(),
            "cutoff": self.cutoff,
            "n": self.n,
            "source": self.source,
            "fitted_model": None if self.fitted is None else self.fitted.to_dict(),
        }

    def save(self, csv_path) -> tuple[Path, Path]:
        """CSV ``alpha,p,sigma_p,delta_p`` plus a ``.json`` metadata file.
        Missing columns are written as ``nan``."""
        csv_path = Path(csv_path)
        nan = np.full(self.alpha_grid.count, np.nan)
        cols = [
            self.alpha,
            self.p,
            nan if self.sigma_p is None else self.sigma_p,
            nan if self.delta_p is None else self.delta_p,
        ]
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["alpha", "p", "sigma_p", "delta_p"])
            for row in zip(*cols):
                writer.writerow([repr(float(v)) for v in row])
        meta = csv_path.with_suffix(".json")
        meta.write_text(json.dumps(self.metadata(), indent=2) + "\n", encoding="utf-8")
        return csv_path, meta

    @classmethod
    def load(cls, csv_path) -> "PEstimate":
        csv_path = Path(csv_path)
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(csv_path.with_suffix(".json").read_text(encoding="utf-8"))
        sigma = data[:, 2]
        delta = data[:, 3]
        fitted = meta.get("fitted_model")
        return cls(
            alpha_grid=Grid1D.from_dict(meta["alpha_grid"]),
            p=data[:, 1],
            cutoff=float(meta["cutoff"]),
            n=int(meta["n"]),
            sigma_p=None if np.all(np.isnan(sigma)) else sigma,
            delta_p=None if np.all(np.isnan(delta)) else delta,
            source=meta.get("source"),
            fitted=None if fitted is None else StateModel.from_dict(fitted),
        )

    def cross_section(self) -> dict[str, np.ndarray]:
        """Plot-ready columns: estimate, one-sigma band, systematic band and
        the fitted model curve where available."""
        out = {"alpha": self.alpha, "p": self.p}
        if self.sigma_p is not None:
            out["p_minus_sigma"] = self.p - self.sigma_p
            out["p_plus_sigma"] = self.p + self.sigma_p
        if self.delta_p is not None:
            out["p_minus_delta"] = self.p - np.abs(self.delta_p)
            out["p_plus_delta"] = self.p + np.abs(self.delta_p)
        if self.fitted is not None:
            out["p_model"] = model_p(self.alpha, self.fitted)
        return out


def _kernel(b_grid: Grid1D, alpha) -> np.ndarray:
    """Rows ``alpha``, columns ``b``: quadrature weight * b * J0(2 b alpha)."""
    b = b_grid.points
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    return bessel_j0(2.0 * np.multiply.outer(alpha, b)) * (simpson_weights(b_grid) * b)


def hankel_transform(phi, b_grid: Grid1D, alpha) -> np.ndarray:
    """``(2/pi) int b J0(2 b alpha) phi(b) db`` over the span of ``b_grid``.

    ``phi`` is a callable or the samples on ``b_grid``.
    """
    vals = phi(b_grid.points) if callable(phi) else np.asarray(phi, dtype=float)
    if vals.shape != (b_grid.count,):
        raise ValueError("phi samples do not match the b grid")
    return (2.0 / math.pi) * (_kernel(b_grid, alpha) @ vals)


def _require_cutoff(cf: CfEstimate) -> int:
    if cf.cutoff is None:
        raise ValueError("characteristic function estimate has no cutoff")
    if cf.cutoff > cf.grid.stop + 1e-9:
        raise ValueError(f"cutoff {cf.cutoff} lies beyond the b grid (max {cf.grid.stop})")
    return cf.grid.index_of(cf.cutoff)


def hankel_reconstruct(cf: CfEstimate, alpha_grid: Grid1D = DEFAULT_ALPHA_GRID) -> PEstimate:
    """P function from the real part of ``cf`` integrated up to its cutoff."""
    if alpha_grid.start != 0:
        raise ValueError("alpha grid must start at 0")
    k = _require_cutoff(cf)
    b_grid = Grid1D(cf.grid.start, cf.grid.step, k + 1)
    p = hankel_transform(cf.phi_re[: k + 1], b_grid, alpha_grid.points)
    return PEstimate(alpha_grid, p, float(cf.cutoff), cf.n, source=cf.source)


def _even_panels(stop: float, step: float, start: float = 0.0) -> Grid1D:
    panels = max(2, int(math.ceil((stop - start) / step - 1e-9)))
    panels += panels % 2
    return Grid1D(start, (stop - start) / panels, panels + 1)


def p_variance(
    cf: CfEstimate,
    alpha_grid: Grid1D = DEFAULT_ALPHA_GRID,
    step: float = VARIANCE_STEP,
    p: np.ndarray | None = None,
) -> np.ndarray:
    """Standard deviation of the reconstructed P function.

    ``sigma_p^2 = (1/N) [ (4/pi^2) iint b b' J0(2b a) J0(2b' a)
    phi(b - b') exp(b b') db db' - p^2 ]`` over ``[0, cutoff]^2``, with
    ``phi`` the real part extended evenly and linearly interpolated.
    ``p`` defaults to :func:`hankel_reconstruct` on the same estimate.
    """
    _require_cutoff(cf)
    vgrid = _even_panels(cf.cutoff, step)
    b = vgrid.points
    diff = np.abs(np.subtract.outer(b, b))
    with np.errstate(over="ignore", invalid="ignore"):
        mixed = np.interp(diff, cf.b, cf.phi_re) * np.exp(np.multiply.outer(b, b))
    if not np.all(np.isfinite(mixed)):
        raise ValueError(f"variance integrand overflows at cutoff {cf.cutoff}; use a smaller cutoff")
    kern = _kernel(vgrid, alpha_grid.points)
    second = (4.0 / math.pi**2) * np.einsum("ai,ij,aj->a", kern, mixed, kern)
    if p is None:
        p = hankel_reconstruct(cf, alpha_grid).p
    return np.sqrt(np.maximum(second - p**2, 0.0) / cf.n)


def _tail_end(fitted: StateModel, cutoff: float, tol: float) -> float:
    b = cutoff
    while b < _TAIL_LIMIT:
        ahead = b + np.linspace(0, 1, 101)
        if np.all(np.abs(model_cf(ahead, fitted)) * ahead < tol):
            return float(b)
        b += 1.0
    return _TAIL_LIMIT


def systematic_error(
    fitted: StateModel,
    alpha_grid: Grid1D = DEFAULT_ALPHA_GRID,
    cutoff: float = 2.8,
    step: float = TAIL_STEP,
    tol: float = 1e-14,
) -> np.ndarray:
    """Signed contribution of ``b > cutoff`` the truncated inversion misses,
    ``(2/pi) int_cutoff^b_max b J0(2 b a) Phi_fit(b) db``.

    ``b_max`` is where ``|Phi_fit(b)| b`` has dropped below ``tol`` (capped
    at 60).
    """
    b_max = _tail_end(fitted, cutoff, tol)
    if b_max <= cutoff:
        return np.zeros(alpha_grid.count)
    tgrid = _even_panels(b_max, step, start=cutoff)
    return hankel_transform(lambda b: model_cf(b, fitted), tgrid, alpha_grid.points)


def normalization_check(est: PEstimate, a_max: float | None = None) -> float:
    """``2 pi int_0^a_max p(a) a da``; 1 for a normalised state."""
    grid = est.alpha_grid if a_max is None else est.alpha_grid.truncated(a_max)
    w = simpson_weights(grid)
    return float(2 * math.pi * (w @ (est.p[: grid.count] * grid.points)))


def reconstruct(
    cf: CfEstimate,
    alpha_grid: Grid1D = DEFAULT_ALPHA_GRID,
    fitted: StateModel | None = None,
    variance_step: float = VARIANCE_STEP,
) -> PEstimate:
    """Inversion, statistical error and (with ``fitted``) systematic error."""
    est = hankel_reconstruct(cf, alpha_grid)
    if cf.sigma is not None:
        est.sigma_p = p_variance(cf, alpha_grid, variance_step, p=est.p)
    if fitted is not None:
        est.delta_p = systematic_error(fitted, alpha_grid, est.cutoff)
        est.fitted = fitted
    return est
