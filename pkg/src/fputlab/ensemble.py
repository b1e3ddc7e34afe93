"""Monte Carlo ensembles of the FPUT flow with well-prepared data.

Initial modes are a_k(0) = sqrt(n_in(k)) eta_k with eta_k i.i.d. unit
variance, either standard complex Gaussian or uniform on the circle.  Each
sample is evolved in physical variables with velocity Verlet, transformed
back to modes at the requested times, and the second-order statistics

    E|a_k(t)|^2      and      E a_k(t) a_{1-k}(t)

are estimated with standard errors.  The headline comparison is against the
first-order kinetic prediction n_in + (t/T_kin) K(n_in), with
T_kin = 1/(4 pi beta^2).

Randomness is counter-based: sample i draws from Philox keyed by
(seed, i), and results are accumulated into per-sample slots before a
fixed-order reduction, so estimates are bit-identical no matter how the
samples are scheduled across threads.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import DEFAULT_DT, LatticeParams, force_array, verlet_step_arrays
from .spectral import dft, from_normal_modes, idft, omega
from . import kinetic as _kin

__all__ = [
    "InitialSpectrum",
    "RandomLaw",
    "CorrelationEstimate",
    "SPECTRA",
    "get_spectrum",
    "sample_initial",
    "kinetic_timescale",
    "run_ensemble",
    "kinetic_prediction",
    "compare",
    "estimate_to_csv",
    "write_manifest",
]


@dataclass(frozen=True)
class InitialSpectrum:
    """Smooth positive periodic spectrum k -> n_in(k), with a stable name."""

    name: str
    fn: object  # callable k -> n_in(k), vectorized

    def __post_init__(self):
        probe = np.linspace(0.0, 1.0, 257)
        vals = np.asarray(self.fn(probe), dtype=float)
        if not np.all(vals > 0):
            raise ValueError(f"spectrum '{self.name}' is not strictly positive")
        if abs(vals[0] - vals[-1]) > 1e-12 * max(1.0, abs(vals[0])):
            raise ValueError(f"spectrum '{self.name}' is not periodic")

    def __call__(self, k):
        return self.fn(k)


SPECTRA = {
    "one_plus_half_cos": lambda k: 1.0 + 0.5 * np.cos(2 * np.pi * np.asarray(k, float)),
    "constant": lambda k: np.ones_like(np.asarray(k, float)),
    "two_harmonics": lambda k: 1.0
    + 0.3 * np.cos(2 * np.pi * np.asarray(k, float))
    + 0.2 * np.cos(4 * np.pi * np.asarray(k, float)),
    "shifted_sin": lambda k: 1.2 + 0.5 * np.sin(2 * np.pi * np.asarray(k, float)),
    "warm_bump": lambda k: 0.8
    + 0.9 * np.exp(-6.0 * np.sin(np.pi * np.asarray(k, float)) ** 2),
    "cool_dip": lambda k: 1.5 - 0.6 * np.exp(-4.0 * np.sin(np.pi * (np.asarray(k, float) - 0.5)) ** 2),
}


def get_spectrum(name: str) -> InitialSpectrum:
    try:
        return InitialSpectrum(name, SPECTRA[name])
    except KeyError:
        raise ValueError(f"unknown spectrum '{name}'; choices: {sorted(SPECTRA)}") from None


@dataclass(frozen=True)
class RandomLaw:
    """Law of the mode phases: 'gaussian' or 'uniform_phase', plus the seed."""

    kind: str
    seed: int

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform_phase"):
            raise ValueError("kind must be 'gaussian' or 'uniform_phase'")


@dataclass
class CorrelationEstimate:
    """Per-k second-moment estimates at one sample time."""

    t: float
    k: np.ndarray
    mean_abs2: np.ndarray
    stderr_abs2: np.ndarray
    mean_cross: np.ndarray
    stderr_cross: np.ndarray
    n_samples: int
    n_aborted: int = 0
    quad_energy: float = 0.0

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("need at least two samples for standard errors")
        if np.any(self.stderr_abs2 < 0) or np.any(self.stderr_cross < 0):
            raise ValueError("standard errors must be nonnegative")


def kinetic_timescale(beta: float) -> float:
    """T_kin = 1/(4 pi beta^2), the time for O(1) spectral change."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return 1.0 / (4.0 * np.pi * beta**2)


def _draw_eta(law: RandomLaw, sample_index: int, n_modes: int) -> np.ndarray:
    """Unit-variance mean-zero i.i.d. complex variables, one Philox stream
    per (seed, sample); draw order is fixed so (sample, k) is reproducible."""
    rng = np.random.Generator(np.random.Philox(key=[law.seed & 0xFFFFFFFFFFFFFFFF,
                                                    sample_index & 0xFFFFFFFFFFFFFFFF]))
    if law.kind == "gaussian":
        xy = rng.standard_normal(2 * n_modes)
        return (xy[:n_modes] + 1j * xy[n_modes:]) / np.sqrt(2.0)
    theta = rng.random(n_modes)
    return np.exp(2j * np.pi * theta)


def sample_initial(n_in: InitialSpectrum, law: RandomLaw, n_sites: int,
                   sample_index: int = 0):
    """One draw of a_k(0) = sqrt(n_in(k)) eta_k, with a_0 = 0."""
    if n_sites < 2:
        raise ValueError("need N >= 2")
    k = np.arange(1, n_sites) / n_sites
    amp = np.sqrt(np.asarray(n_in(k), dtype=float))
    if np.any(~(amp > 0)):
        raise ValueError("n_in must be strictly positive")
    a = np.zeros(n_sites, dtype=complex)
    a[1:] = amp * _draw_eta(law, sample_index, n_sites - 1)
    from .spectral import ModeVector

    return ModeVector(a)


def _modes_batch(n_in, law, n_sites, indices) -> np.ndarray:
    out = np.zeros((len(indices), n_sites), dtype=complex)
    k = np.arange(1, n_sites) / n_sites
    amp = np.sqrt(np.asarray(n_in(k), dtype=float))
    for row, idx in enumerate(indices):
        out[row, 1:] = amp * _draw_eta(law, idx, n_sites - 1)
    return out


def _evolve_chunk(a0: np.ndarray, beta: float, t_samples, dt: float):
    """Evolve a batch of mode vectors; yield the mode batch at each t."""
    Q, P = from_normal_modes(a0)
    q, p = idft(Q, P)
    t_now = 0.0
    f = force_array(q, beta)
    for t_target in t_samples:
        span = t_target - t_now
        if span > 1e-14:
            n_steps = max(1, int(np.ceil(span / dt - 1e-12)))
            h = span / n_steps
            for _ in range(n_steps):
                q, p, f = verlet_step_arrays(q, p, beta, h, f)
            t_now = t_target
        Qc, Pc = dft(q, p)
        n = q.shape[-1]
        kk = np.arange(1, n) / n
        w = omega(kk)
        a = np.zeros_like(Qc)
        a[..., 1:] = (np.sqrt(2) / 2) * (np.sqrt(w) * Qc[..., 1:] + 1j * Pc[..., 1:] / np.sqrt(w))
        yield t_target, a


def run_ensemble(
    params: LatticeParams,
    n_in: InitialSpectrum,
    law: RandomLaw,
    t_samples,
    n_samples: int,
    dt: float = DEFAULT_DT,
    threads: int = 1,
    chunk_size: int = 256,
) -> list[CorrelationEstimate]:
    """Estimate E|a_k(t)|^2 and E a_k a_{1-k} at each requested time.

    Samples that blow up (non-finite state) are dropped and counted in
    ``n_aborted``.  Identical (seed, n_samples, t_samples) give bit-identical
    results for any ``threads``/``chunk_size``.
    """
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    t_samples = [float(t) for t in t_samples]
    if any(t < 0 for t in t_samples) or t_samples != sorted(t_samples):
        raise ValueError("t_samples must be sorted and nonnegative")
    n = params.n_sites
    n_t = len(t_samples)
    # pre-allocated per-sample slots -> schedule-independent reduction
    abs2 = np.zeros((n_t, n_samples, n))
    cross = np.zeros((n_t, n_samples, n), dtype=complex)
    alive = np.zeros((n_t, n_samples), dtype=bool)

    def work(lo_hi):
        lo, hi = lo_hi
        idx = list(range(lo, hi))
        a0 = _modes_batch(n_in, law, n, idx)
        for ti, (_, a) in enumerate(_evolve_chunk(a0, params.beta, t_samples, dt)):
            ok = np.all(np.isfinite(a.view(float).reshape(a.shape[0], -1)), axis=1)
            partner = np.roll(a[:, ::-1], 1, axis=1)  # index k -> 1-k
            abs2[ti, lo:hi] = np.where(ok[:, None], np.abs(a) ** 2, 0.0)
            cross[ti, lo:hi] = np.where(ok[:, None], a * partner, 0.0)
            alive[ti, lo:hi] = ok

    spans = [(lo, min(lo + chunk_size, n_samples)) for lo in range(0, n_samples, chunk_size)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, spans))
    else:
        for s in spans:
            work(s)

    kk = np.arange(n) / n
    out = []
    for ti, t in enumerate(t_samples):
        ok = alive[ti]
        m = int(np.sum(ok))
        if m < 2:
            raise ArithmeticError(f"fewer than 2 surviving samples at t = {t}")
        sel_abs2 = abs2[ti][ok]
        sel_cross = cross[ti][ok]
        mean_abs2 = np.sum(sel_abs2, axis=0) / m
        var_abs2 = np.sum((sel_abs2 - mean_abs2) ** 2, axis=0) / (m - 1)
        mean_cross = np.sum(sel_cross, axis=0) / m
        var_cross = np.sum(np.abs(sel_cross - mean_cross) ** 2, axis=0) / (m - 1)
        out.append(
            CorrelationEstimate(
                t=t,
                k=kk.copy(),
                mean_abs2=mean_abs2,
                stderr_abs2=np.sqrt(var_abs2 / m),
                mean_cross=mean_cross,
                stderr_cross=np.sqrt(var_cross / m),
                n_samples=m,
                n_aborted=n_samples - m,
                quad_energy=float(np.sum(omega(kk) * mean_abs2)),
            )
        )
    return out


def kinetic_prediction(n_in: InitialSpectrum, beta: float, t: float,
                       n_sites: int, m: int = 256) -> np.ndarray:
    """n_in(k) + (t/T_kin) K(n_in)(k) on the lattice wavenumbers (0 at k=0)."""
    grid = _kin.SpectrumGrid.from_function(n_in, m)
    kk = np.arange(n_sites) / n_sites
    pred = np.asarray(n_in(kk), dtype=float)
    scale = t / kinetic_timescale(beta)
    coll = np.array([_kin.collision_operator(grid, x) for x in kk])
    pred = pred + scale * coll
    pred[0] = 0.0
    return pred


def compare(estimate: CorrelationEstimate, prediction: np.ndarray,
            n_in: InitialSpectrum | None = None) -> dict:
    """Residuals and summary statistics of measurement vs prediction.

    Increment-based metrics need ``n_in``; they compare
    (E|a_k|^2 - n_in) against (prediction - n_in) over k != 0.
    """
    prediction = np.asarray(prediction, dtype=float)
    if prediction.shape != estimate.mean_abs2.shape:
        raise ValueError("grid mismatch between estimate and prediction")
    expected_k = np.arange(len(prediction)) / len(prediction)
    if not np.array_equal(estimate.k, expected_k):
        raise ValueError("grid mismatch: estimate.k is not the canonical lattice grid")
    sel = slice(1, None)
    residual = estimate.mean_abs2 - prediction
    report = {
        "t": estimate.t,
        "residual": residual,
        "n_samples": estimate.n_samples,
        "n_aborted": estimate.n_aborted,
    }
    if n_in is not None:
        base = np.asarray(n_in(estimate.k), dtype=float)
        meas_inc = (estimate.mean_abs2 - base)[sel]
        pred_inc = (prediction - base)[sel]
        denom_inf = float(np.max(np.abs(pred_inc)))
        denom_l2 = float(np.linalg.norm(pred_inc))
        report["linf_rel_increment"] = float(np.max(np.abs(meas_inc - pred_inc)) / denom_inf)
        report["l2_rel_increment"] = float(np.linalg.norm(meas_inc - pred_inc) / denom_l2)
        report["increment_correlation"] = float(np.corrcoef(meas_inc, pred_inc)[0, 1])
        report["cross_linf"] = float(np.max(np.abs(estimate.mean_cross[sel])))
        report["cross_over_increment_scale"] = report["cross_linf"] / denom_inf
    return report


def estimate_to_csv(estimate: CorrelationEstimate, path,
                    n_in: InitialSpectrum | None = None,
                    prediction: np.ndarray | None = None) -> None:
    base = np.asarray(n_in(estimate.k), dtype=float) if n_in is not None else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "n_in", "mean_abs2", "stderr_abs2", "re_cross",
                    "im_cross", "stderr_cross", "prediction"])
        for i, k in enumerate(estimate.k):
            w.writerow([
                repr(float(k)),
                repr(float(base[i])) if base is not None else "",
                repr(float(estimate.mean_abs2[i])),
                repr(float(estimate.stderr_abs2[i])),
                repr(float(estimate.mean_cross[i].real)),
                repr(float(estimate.mean_cross[i].imag)),
                repr(float(estimate.stderr_cross[i])),
                repr(float(prediction[i])) if prediction is not None else "",
            ])


def write_manifest(path, **kwargs) -> None:
    """JSON record of all parameters and the seed for a reproducible run."""
    with open(path, "w") as fh:
        json.dump(kwargs, fh, indent=2, default=str)
