"""beta-FPUT chain in physical variables (q, p).

N identical unit masses on a ring, nearest-neighbor springs with harmonic
constant 1 and quartic coupling beta (the cubic alpha term is absent):

    H = sum_j [ p_j^2/2 + (q_{j+1}-q_j)^2/2 + beta (q_{j+1}-q_j)^4/4 ],
    qdot_j = p_j,
    pdot_j = (q_{j+1} - 2 q_j + q_{j-1})
             + beta [ (q_{j+1}-q_j)^3 - (q_j-q_{j-1})^3 ],

with periodic indices (q_N = q_0).  Time stepping is velocity Verlet:
second order, symplectic, exactly time-reversible, and momentum-conserving
to machine precision because the force is a discrete divergence.

All functions accept batched states with shape (..., N); the last axis is
the lattice.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeParams",
    "LatticeState",
    "hamiltonian",
    "force",
    "step",
    "step_back",
    "evolve",
    "bond_stretch",
    "force_array",
    "verlet_step_arrays",
    "trajectory_to_csv",
]

# fastest phonon: omega_max = 2, resolved with >= 40 points per period
DEFAULT_DT = 0.025


@dataclass(frozen=True)
class LatticeParams:
    """Chain size and coupling; kappa and mass are pinned to 1."""

    n_sites: int
    beta: float
    kappa: float = 1.0
    mass: float = 1.0
    gamma: float | None = None
    epsilon_scaling: float | None = None

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least two oscillators")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.kappa != 1.0 or self.mass != 1.0:
            raise ValueError("kappa and mass are fixed to 1")

    @classmethod
    def from_gamma(cls, n_sites: int, gamma: float, epsilon_scaling: float = 0.01):
        """Weak-coupling scaling law beta = N^{-gamma}, gamma in (0,1)."""
        if not (0.0 < gamma < 1.0):
            raise ValueError("gamma must lie in (0,1)")
        return cls(
            n_sites=n_sites,
            beta=float(n_sites) ** (-gamma),
            gamma=gamma,
            epsilon_scaling=epsilon_scaling,
        )


@dataclass
class LatticeState:
    """Displacements q, momenta p (length N), and the current time."""

    q: np.ndarray
    p: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("state entries must be finite")
        if self.time < 0:
            raise ValueError("time must be nonnegative")

    def copy(self) -> "LatticeState":
        return LatticeState(self.q.copy(), self.p.copy(), self.time)


def bond_stretch(q: np.ndarray) -> np.ndarray:
    """r_j = q_{j+1} - q_j with periodic wraparound, batched on axis -1."""
    return np.roll(q, -1, axis=-1) - q


def hamiltonian(state: LatticeState, params: LatticeParams) -> float:
    if state.q.shape[-1] != params.n_sites:
        raise ValueError("state size does not match params")
    if not (np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.p))):
        raise ValueError("non-finite state")
    r = bond_stretch(state.q)
    return float(
        0.5 * np.sum(state.p**2) + 0.5 * np.sum(r**2) + 0.25 * params.beta * np.sum(r**4)
    )


def force_array(q: np.ndarray, beta: float) -> np.ndarray:
    """Force on each site; batched over leading axes."""
    r = bond_stretch(q)
    s = r + beta * r**3  # tension in bond j (between sites j and j+1)
    return s - np.roll(s, 1, axis=-1)


def force(state: LatticeState, params: LatticeParams) -> np.ndarray:
    if state.q.shape[-1] != params.n_sites:
        raise ValueError("state size does not match params")
    if not np.all(np.isfinite(state.q)):
        raise ValueError("non-finite state")
    return force_array(state.q, params.beta)


def verlet_step_arrays(q, p, beta, dt, f=None):
    """One velocity-Verlet step on raw arrays; returns (q, p, force(q_new))."""
    if f is None:
        f = force_array(q, beta)
    p_half = p + 0.5 * dt * f
    q_new = q + dt * p_half
    f_new = force_array(q_new, beta)
    p_new = p_half + 0.5 * dt * f_new
    return q_new, p_new, f_new


def step(state: LatticeState, params: LatticeParams, dt: float) -> LatticeState:
    """Advance one velocity-Verlet step (dt may be negative only via evolve)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    q, p, _ = verlet_step_arrays(state.q, state.p, params.beta, dt)
    return LatticeState(q, p, state.time + dt)


def step_back(state: LatticeState, params: LatticeParams, dt: float) -> LatticeState:
    """Inverse of :func:`step`: velocity Verlet run backwards by dt > 0.

    Uses the time-reversal symmetry (flip momenta, step forward, flip
    back), which is the Verlet inverse in exact arithmetic.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    flipped = LatticeState(state.q, -state.p, state.time)
    fwd = step(flipped, params, dt)
    out = LatticeState(fwd.q, -fwd.p, state.time)
    out.time = state.time - dt
    return out


def evolve(state: LatticeState, params: LatticeParams, t_end: float, dt: float = DEFAULT_DT):
    """Yield states at each step until t_end (the input state first).

    The number of steps is rounded so the final sample lands on t_end
    exactly (dt is shrunk if it does not divide the interval).
    """
    if t_end < state.time:
        raise ValueError("t_end must not precede the state's time")
    yield state.copy()
    span = t_end - state.time
    if span == 0:
        return
    n_steps = max(1, int(np.ceil(span / dt - 1e-12)))
    h = span / n_steps
    cur = state.copy()
    q, p = cur.q, cur.p
    f = force_array(q, params.beta)
    for i in range(1, n_steps + 1):
        q, p, f = verlet_step_arrays(q, p, params.beta, h, f)
        cur = LatticeState(q, p, state.time + i * h)
        yield cur


def trajectory_to_csv(states, path) -> None:
    """Write snapshots as rows: time, q_0..q_{N-1}, p_0..p_{N-1}."""
    states = list(states)
    if not states:
        raise ValueError("no states to write")
    n = states[0].q.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [f"q_{j}" for j in range(n)] + [f"p_{j}" for j in range(n)])
        for s in states:
            w.writerow([repr(s.time)] + [repr(x) for x in s.q] + [repr(x) for x in s.p])
