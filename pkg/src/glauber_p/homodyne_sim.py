"""Synthetic phase-randomised balanced-homodyne data.

Two samplers with the same target law:

* :func:`sample_quadratures` draws directly from the closed-form measured
  density, written as a two-component mixture (normal, and a signed
  chi-with-3-dof variate for the ``x^2``-weighted normal).
* :func:`sample_via_loss_channel` builds the state from photon numbers:
  it draws a photon number, then a Fock-state quadrature by rejection,
  then mixes in vacuum noise on a beam splitter of transmissivity ``eta``.

Agreement of the two is checked by two-sample tests in the test suite.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .numerics import RngStream
from .states import (
    StateModel,
    _pdf_params,
    spats_photon_dist,
    thermal_photon_dist,
    truncated_photon_dist,
)

__all__ = [
    "QuadratureDataset",
    "sample_quadratures",
    "sample_via_loss_channel",
    "fock_quadrature_pdf",
    "sample_fock_quadratures",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True)
class QuadratureDataset:
    """Quadrature samples with their provenance.

    ``samples`` is stored read-only. ``model`` and ``seed`` are ``None`` for
    data that did not come from the simulator.
    """

    samples: np.ndarray
    model: StateModel | None = None
    seed: int | None = None
    n: int = field(init=False)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("dataset is empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dataset contains non-finite samples")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "n", int(arr.size))

    def fingerprint(self) -> str:
        """SHA-256 of the raw sample bytes, used to tie estimates to data."""
        return hashlib.sha256(np.ascontiguousarray(self.samples).tobytes()).hexdigest()

    def metadata(self) -> dict:
        meta = {"n": self.n, "seed": self.seed}
        if self.model is not None:
            meta.update(self.model.to_dict())
        return meta


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return int(n)


def sample_quadratures(model: StateModel, n: int, seed: int) -> QuadratureDataset:
    """Exact i.i.d. draws from :func:`~glauber_p.states.measured_quadrature_pdf`."""
    if not isinstance(model, StateModel):
        raise TypeError("model must be a StateModel")
    n = _check_n(n)
    rng = RngStream(seed)
    s2, frac = _pdf_params(model)
    s = math.sqrt(s2)
    shaped = rng.uniform(n) < frac
    x = s * rng.normal(n)
    k = int(shaped.sum())
    if k:
        # x^2 phi(x) is the law of a chi_3 variate with a random sign
        chi3 = np.sqrt(np.sum(rng.normal((k, 3)) ** 2, axis=1))
        sign = np.where(rng.uniform(k) < 0.5, -1.0, 1.0)
        x[shaped] = s * sign * chi3
    return QuadratureDataset(x, model, seed)


def _hermite_functions_sq(n: int, y: np.ndarray) -> np.ndarray:
    """``h_n(y)^2`` for the L2-normalised Hermite function ``h_n``.

    Upward three-term recurrence, stable for all n used here.
    """
    h_prev = np.zeros_like(y)
    h = math.pi**-0.25 * np.exp(-(y**2) / 2)
    for k in range(n):
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * y * h - math.sqrt(k / (k + 1)) * h_prev
    return h**2


def fock_quadrature_pdf(x, n: int):
    """Quadrature density of the Fock state ``|n>`` (vacuum variance 1)."""
    x = np.asarray(x, dtype=float)
    return _hermite_functions_sq(n, x / math.sqrt(2)) / math.sqrt(2)


@lru_cache(maxsize=None)
def _envelope(n: int):
    # Normal envelope of variance 2n+2; bound found on a fine grid plus margin.
    var = 2.0 * n + 2.0
    reach = math.sqrt(2 * (2 * n + 1)) + 12
    x = np.linspace(0, reach, 40_001)
    env = np.exp(-(x**2) / (2 * var)) / math.sqrt(2 * math.pi * var)
    bound = float(np.max(fock_quadrature_pdf(x, n) / env)) * 1.02
    return var, bound


def sample_fock_quadratures(n: int, size: int, rng: RngStream) -> np.ndarray:
    """Rejection sampling of ``size`` quadratures of ``|n>``."""
    var, bound = _envelope(n)
    sd = math.sqrt(var)
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = int(need * bound * 1.1) + 16
        cand = sd * rng.normal(batch)
        env = np.exp(-(cand**2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        keep = cand[rng.uniform(batch) * bound * env < fock_quadrature_pdf(cand, n)]
        take = keep[:need]
        out[filled : filled + take.size] = take
        filled += take.size
    return out


def _ideal_quadratures(photons: np.ndarray, rng: RngStream) -> np.ndarray:
    x = np.empty(photons.size)
    for n in np.unique(photons):
        idx = np.nonzero(photons == n)[0]
        x[idx] = sample_fock_quadratures(int(n), idx.size, rng)
    return x


def sample_via_loss_channel(model: StateModel, n: int, seed: int) -> QuadratureDataset:
    """Photon-number route: lossless quadrature ``x`` of the SPATS (or the
    thermal background), then ``sqrt(eta) x + sqrt(1 - eta) x_vac``."""
    if not isinstance(model, StateModel):
        raise TypeError("model must be a StateModel")
    n = _check_n(n)
    rng = RngStream(seed)
    is_spats = rng.uniform(n) < model.w
    photons = np.empty(n, dtype=np.int64)
    n_spats = int(is_spats.sum())
    if n_spats:
        if model.nbar == 0:
            photons[is_spats] = 1
        else:
            p = truncated_photon_dist(spats_photon_dist, model.nbar)
            photons[is_spats] = rng.generator.choice(p.size, size=n_spats, p=p)
    if n_spats < n:
        p = truncated_photon_dist(thermal_photon_dist, model.nbar) if model.nbar > 0 else np.ones(1)
        photons[~is_spats] = rng.generator.choice(p.size, size=n - n_spats, p=p)
    x_ideal = _ideal_quadratures(photons, rng)
    x = math.sqrt(model.eta) * x_ideal
    if model.eta < 1:
        x = x + math.sqrt(1 - model.eta) * rng.normal(n)
    return QuadratureDataset(x, model, seed)


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def save_dataset(dataset: QuadratureDataset, path) -> tuple[Path, Path]:
    """Write one value per line to ``path`` and metadata to ``path.json``."""
    path = Path(path)
    side = _sidecar_path(path)
    meta = dataset.metadata()
    meta.setdefault("nbar", None)
    meta.setdefault("eta", None)
    meta.setdefault("w", None)
    side.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    # repr round-trips doubles exactly
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{v!r}\n" for v in dataset.samples.tolist())
    return path, side


def load_dataset(path) -> QuadratureDataset:
    """Read a CSV written by :func:`save_dataset` (sidecar optional, so plain
    measured data can be dropped in)."""
    path = Path(path)
    samples = np.loadtxt(path, dtype=float, delimiter=",", ndmin=1)
    side = _sidecar_path(path)
    model = seed = None
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        if meta.get("nbar") is not None:
            model = StateModel.from_dict(meta)
        seed = meta.get("seed")
        if meta.get("n") is not None and int(meta["n"]) != samples.size:
            raise ValueError(f"sidecar says n={meta['n']} but {path} holds {samples.size} values")
    return QuadratureDataset(samples, model, seed)
