"""Closed-form state models: thermal, single-photon-added thermal (SPATS) and
their mixture, seen through a detector of efficiency ``eta``.

Conventions
-----------
Phase space is radial: functions take ``|alpha|`` (or ``b = |beta|`` for
characteristic functions) and drop the phase. Quadratures are normalised so
that the vacuum has unit variance, i.e. the quadrature characteristic
function is ``model_cf(b) * exp(-b**2 / 2)``. Losses act on characteristic
functions as ``b -> sqrt(eta) * b``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .numerics import Grid1D, integrate_1d

__all__ = [
    "StateModel",
    "thermal_p",
    "spats_p",
    "spats_cf",
    "thermal_cf",
    "model_cf",
    "model_p",
    "rescale_p_for_loss",
    "thermal_photon_dist",
    "spats_photon_dist",
    "truncated_photon_dist",
    "measured_quadrature_pdf",
    "measured_quadrature_cdf",
    "normally_ordered_moment",
    "TruncationWarning",
]


class TruncationWarning(UserWarning):
    """Radial integral cut off while the integrand was still significant."""


@dataclass(frozen=True)
class StateModel:
    """Prepared state: ``w`` SPATS plus ``1 - w`` thermal background, both
    with mean thermal photon number ``nbar`` and detected with efficiency
    ``eta``."""

    nbar: float
    eta: float = 1.0
    w: float = 1.0

    def __post_init__(self):
        for name in ("nbar", "eta", "w"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, float(val))
        if self.nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 <= self.w <= 1:
            raise ValueError(f"w must lie in [0, 1], got {self.w}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "StateModel":
        return cls(nbar=float(d["nbar"]), eta=float(d["eta"]), w=float(d["w"]))


def _radial(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0):
        raise ValueError("|alpha| must be non-negative")
    return a


def _positive_nbar(nbar):
    if not nbar > 0:
        raise ValueError(f"nbar must be positive, got {nbar}")


def _ret(x, like):
    return float(x) if np.ndim(like) == 0 else x


def thermal_p(alpha, nbar: float):
    """P function of a thermal state, ``exp(-|a|^2/nbar) / (pi nbar)``."""
    _positive_nbar(nbar)
    a = _radial(alpha)
    return _ret(np.exp(-(a**2) / nbar) / (math.pi * nbar), alpha)


def spats_p(alpha, nbar: float):
    """P function of a single-photon-added thermal state.

    Negative for ``|alpha|**2 < nbar / (1 + nbar)``, positive outside.
    """
    _positive_nbar(nbar)
    a2 = _radial(alpha) ** 2
    val = ((1 + nbar) * a2 - nbar) * np.exp(-a2 / nbar) / (math.pi * nbar**3)
    return _ret(val, alpha)


def spats_cf(b, nbar: float):
    """Characteristic function of the SPATS P function."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    b2 = np.asarray(b, dtype=float) ** 2
    return _ret((1 - (1 + nbar) * b2) * np.exp(-nbar * b2), b)


def thermal_cf(b, nbar: float):
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    return _ret(np.exp(-nbar * np.asarray(b, dtype=float) ** 2), b)


def model_cf(b, model: StateModel):
    """Characteristic function of the P function measured at ``model.eta``."""
    bs = math.sqrt(model.eta) * np.asarray(b, dtype=float)
    val = model.w * spats_cf(bs, model.nbar) + (1 - model.w) * thermal_cf(bs, model.nbar)
    return _ret(val, b)


def model_p(alpha, model: StateModel):
    """P function seen at efficiency ``eta``, ``P_eta(a) = P(a / sqrt(eta)) / eta``.

    This is what a Hankel inversion of :func:`model_cf` returns.
    """
    a = _radial(alpha) / math.sqrt(model.eta)
    val = model.w * spats_p(a, model.nbar) if model.w > 0 else 0.0
    if model.w < 1:
        val = val + (1 - model.w) * thermal_p(a, model.nbar)
    return _ret(np.asarray(val) / model.eta, alpha)


def rescale_p_for_loss(p_eta: Callable, eta: float) -> Callable:
    """Map the P function measured at efficiency ``eta`` to the lossless one:
    ``alpha -> eta * p_eta(sqrt(eta) * alpha)``."""
    if not (math.isfinite(eta) and 0 < eta <= 1):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    root = math.sqrt(eta)

    def p(alpha):
        return eta * p_eta(root * np.asarray(alpha, dtype=float))

    return p


def thermal_photon_dist(n, nbar: float):
    """Bose-Einstein photon-number distribution."""
    n = np.asarray(n)
    if nbar == 0:
        return _ret((n == 0).astype(float), n)
    _positive_nbar(nbar)
    ratio = nbar / (1 + nbar)
    return _ret(np.exp(n * math.log(ratio)) / (1 + nbar), n)


def spats_photon_dist(n, nbar: float):
    """Photon-number distribution of ``a^dag rho_th a`` (normalised).

    ``<m| a^dag rho_th a |m> = m p_th(m - 1)`` and the trace is ``nbar + 1``,
    hence ``p_m = m nbar^(m-1) / (1 + nbar)^(m+1)``.
    """
    _positive_nbar(nbar)
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("photon numbers must be non-negative")
    ratio = nbar / (1 + nbar)
    m = np.maximum(n, 1)
    val = np.where(n == 0, 0.0, n * np.exp((m - 1) * math.log(ratio)) / (1 + nbar) ** 2)
    return _ret(val, n)


def truncated_photon_dist(pmf: Callable, nbar: float, tail: float = 1e-12) -> np.ndarray:
    """``pmf(0..n_max)`` with ``n_max`` the first index where the cumulative
    mass exceeds ``1 - tail``; renormalised."""
    chunk = 64
    probs = np.empty(0)
    start = 0
    while True:
        probs = np.concatenate([probs, pmf(np.arange(start, start + chunk), nbar)])
        cum = np.cumsum(probs)
        hit = np.nonzero(cum > 1 - tail)[0]
        if hit.size:
            probs = probs[: hit[0] + 1]
            return probs / probs.sum()
        start += chunk
        if start > 100_000:
            raise RuntimeError("photon distribution does not converge")


def _pdf_params(model: StateModel):
    s2 = 2 * model.eta * model.nbar + 1
    # weight of the x^2-shaped component; 1 - frac >= 0 for every valid model
    frac = model.w * model.eta * (1 + model.nbar) / s2
    return s2, frac


def measured_quadrature_pdf(x, model: StateModel):
    """Density of a phase-averaged measured quadrature.

    Inverting ``model_cf(b) exp(-b^2/2)`` gives
    ``g(x) [1 - a + a x^2 / s^2]`` with ``g`` the centred normal density of
    variance ``s^2 = 2 eta nbar + 1`` and ``a = w eta (1 + nbar) / s^2``.
    """
    s2, frac = _pdf_params(model)
    x = np.asarray(x, dtype=float)
    z2 = x**2 / s2
    g = np.exp(-z2 / 2) / math.sqrt(2 * math.pi * s2)
    return _ret(g * (1 - frac + frac * z2), x)


def measured_quadrature_cdf(x, model: StateModel):
    """CDF matching :func:`measured_quadrature_pdf`;
    uses ``int_{-inf}^z t^2 phi(t) dt = Phi(z) - z phi(z)``."""
    s2, frac = _pdf_params(model)
    z = np.asarray(x, dtype=float) / math.sqrt(s2)
    phi = np.exp(-(z**2) / 2) / math.sqrt(2 * math.pi)
    return _ret(ndtr(z) - frac * z * phi, x)


def normally_ordered_moment(
    p: Callable,
    k: int,
    a_max: float | None = None,
    *,
    nbar: float | None = None,
    step: float = 0.002,
    tail_tol: float = 1e-8,
) -> float:
    """``<(a^dag)^k a^k> = 2 pi int_0^a_max p(a) a^(2k) a da`` for a radial P.

    ``a_max`` defaults to ``5 sqrt(nbar + 1)`` when ``nbar`` is given,
    otherwise 10. Emits :class:`TruncationWarning` when
    ``|p(a_max) a_max^(2k+1)|`` exceeds ``tail_tol``.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    if a_max is None:
        a_max = 5 * math.sqrt(nbar + 1) if nbar is not None else 10.0
    grid = Grid1D.from_range(0.0, a_max, step)
    tail = abs(float(p(np.array([a_max]))[0]) * a_max ** (2 * k + 1))
    if tail > tail_tol:
        warnings.warn(
            f"moment integrand still {tail:.2e} at a_max={a_max}", TruncationWarning, stacklevel=2
        )
    return 2 * math.pi * integrate_1d(lambda a: p(a) * a ** (2 * k + 1), grid)
