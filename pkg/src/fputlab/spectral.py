"""Fourier / normal-mode layer for the beta-FPUT chain.

Wavenumbers live on the discrete torus Z_N = {j/N : j = 0..N-1}, identified
with [0,1).  The linear chain has dispersion

    omega(k) = 2*|sin(pi*k)|,

and the cubic (beta) nonlinearity couples normal modes through the
coefficient

    T_{z1,z2,z3}(k1,k2,k3)
        = -z1*z2*z3 * (1/4) * iota(z1*k1 + z2*k2 + z3*k3) * sqrt(omega_k)
          * prod_i iota(k_i)*sqrt(omega_{k_i}),

where iota(x) = sgn sin(pi*x) is 2-periodic and the output wavenumber is
k = z1*k1 + z2*k2 + z3*k3 reduced mod 1.  Note that iota is evaluated at the
*unreduced* real sum, so wrap-arounds flip the sign of the coupling; all
momentum bookkeeping here is done in exact integer arithmetic mod N (and mod
2N for iota) to keep that sign exact.

A quartet (k; k1,k2,k3) is resonant when both the momentum constraint and
omega_k = z1*omega_1 + z2*omega_2 + z3*omega_3 hold; by strict subadditivity
of omega on (0,1) this only happens for the {+,+,-} sign pattern, and there
only for the trivial pairings {k,k3} = {k1,k2}.  ``min_offresonance`` scans
the lattice exhaustively to measure how far every other sign type stays from
resonance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModeVector",
    "SignTriple",
    "ResonanceQuery",
    "omega",
    "iota",
    "iota_exact",
    "dft",
    "dft_direct",
    "idft",
    "to_normal_modes",
    "from_normal_modes",
    "interaction_coeff",
    "resonance_factor",
    "min_offresonance",
    "psi_halfwave",
]


def omega(k):
    """Phonon dispersion 2*|sin(pi*k)| (1-periodic, accepts arrays)."""
    return 2.0 * np.abs(np.sin(np.pi * np.asarray(k, dtype=float)))


def iota(x):
    """sgn sin(pi*x): +1 on (0,1) mod 2, -1 on (1,2) mod 2, 0 at integers."""
    return np.sign(np.sin(np.pi * np.asarray(x, dtype=float)))


def iota_exact(j_sum, n_sites: int):
    """iota evaluated at j_sum/n_sites with exact integer arithmetic.

    ``j_sum`` is the (possibly negative, unreduced) integer numerator of a
    signed wavenumber sum.  Returns +1 / -1 / 0 as integers.
    """
    m = np.mod(np.asarray(j_sum), 2 * n_sites)
    out = np.where(m < n_sites, 1, -1)
    return np.where(m % n_sites == 0, 0, out)


def psi_halfwave(k):
    """iota(k)*sqrt(omega(k)); 1-antiperiodic: psi(k+1) = -psi(k)."""
    return iota(k) * np.sqrt(omega(k))


@dataclass(frozen=True)
class SignTriple:
    """Three interaction signs (z1, z2, z3), each +1 or -1."""

    z1: int
    z2: int
    z3: int

    def __post_init__(self):
        for z in (self.z1, self.z2, self.z3):
            if z not in (-1, 1):
                raise ValueError(f"signs must be +-1, got {z}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.z1, self.z2, self.z3)

    def is_resonant_type(self) -> bool:
        """True when the multiset of signs is {+,+,-} (the resonant type)."""
        return sorted(self.as_tuple()) == [-1, 1, 1]


@dataclass(frozen=True)
class ResonanceQuery:
    """Arguments of the resonance factor Omega^zeta_{z1,z2,z3}(k, k1..k3)."""

    zeta: int
    signs: SignTriple
    k: float
    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        if self.zeta not in (-1, 1):
            raise ValueError("zeta must be +-1")
        for x in (self.k, self.k1, self.k2, self.k3):
            if not (0.0 <= x < 1.0):
                raise ValueError("torus points must lie in [0,1)")


@dataclass
class ModeVector:
    """Complex normal-mode amplitudes a_k on k = j/N, j = 0..N-1.

    The zero mode is excluded by convention (the center of mass decouples),
    so ``amplitudes[0]`` must be exactly zero.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1:
            raise ValueError("mode vector must be one-dimensional")
        if self.amplitudes[0] != 0:
            raise ValueError("zero mode a_0 must be exactly 0")

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def wavenumbers(self) -> np.ndarray:
        n = self.n_sites
        return np.arange(n) / n

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "re_a", "im_a"])
            for k, a in zip(self.wavenumbers, self.amplitudes):
                w.writerow([repr(k), repr(a.real), repr(a.imag)])

    @classmethod
    def from_csv(cls, path) -> "ModeVector":
        ks, re, im = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                ks.append(float(row["k"]))
                re.append(float(row["re_a"]))
                im.append(float(row["im_a"]))
        return cls(np.asarray(re) + 1j * np.asarray(im))


def dft_direct(q: np.ndarray, p: np.ndarray):
    """O(N^2) reference transform Q_k = N^{-1/2} sum_j q_j e^{-2 pi i k j}."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise ValueError("q and p must have equal length")
    n = q.shape[-1]
    j = np.arange(n)
    kernel = np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)
    return q @ kernel, p @ kernel


def dft(q: np.ndarray, p: np.ndarray):
    """Discrete Fourier transform of lattice data, N^{-1/2} normalization.

    Works on trailing axes, so batches of shape (..., N) transform at once.
    Satisfies the reality constraint Q_k = conj(Q_{1-k}) for real input.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise ValueError("q and p must have equal length")
    n = q.shape[-1]
    return np.fft.fft(q, axis=-1) / np.sqrt(n), np.fft.fft(p, axis=-1) / np.sqrt(n)


def idft(Q: np.ndarray, P: np.ndarray):
    """Inverse of :func:`dft`; returns real (q, p), rejecting large residues.

    The imaginary part left over by roundoff is dropped after an internal
    consistency check (1e-9 tolerance against the reality constraint).
    """
    Q = np.asarray(Q, dtype=complex)
    P = np.asarray(P, dtype=complex)
    n = Q.shape[-1]
    q = np.fft.ifft(Q, axis=-1) * np.sqrt(n)
    p = np.fft.ifft(P, axis=-1) * np.sqrt(n)
    scale = max(1.0, float(np.max(np.abs(Q))), float(np.max(np.abs(P))))
    if max(float(np.max(np.abs(q.imag))), float(np.max(np.abs(p.imag)))) > 1e-9 * scale:
        raise ValueError("input does not satisfy the reality constraint")
    return q.real, p.real


def to_normal_modes(Q: np.ndarray, P: np.ndarray, drop_zero_tol: float = 1e-9) -> ModeVector:
    """a_k = (sqrt(2)/2) [omega_k^{1/2} Q_k + i omega_k^{-1/2} P_k], a_0 = 0.

    Any content in the zero mode is reported (ValueError above tolerance)
    and dropped: experiments are constrained to sum(q) = sum(p) = 0.
    """
    Q = np.asarray(Q, dtype=complex)
    P = np.asarray(P, dtype=complex)
    n = Q.shape[-1]
    k = np.arange(1, n) / n
    w = omega(k)
    a = np.zeros(Q.shape, dtype=complex)
    a[..., 1:] = (np.sqrt(2) / 2) * (np.sqrt(w) * Q[..., 1:] + 1j * P[..., 1:] / np.sqrt(w))
    scale = max(1.0, float(np.max(np.abs(Q))), float(np.max(np.abs(P))))
    z = max(float(np.max(np.abs(Q[..., 0]))), float(np.max(np.abs(P[..., 0]))))
    if z > drop_zero_tol * scale:
        raise ValueError(
            f"zero-mode content |Q_0|,|P_0| = {z:.3e} exceeds tolerance; "
            "constrain data to sum(q) = sum(p) = 0"
        )
    if a.ndim == 1:
        return ModeVector(a)
    return a  # batched use returns the raw array


def from_normal_modes(a) -> tuple[np.ndarray, np.ndarray]:
    """Invert :func:`to_normal_modes` on the k != 0 subspace.

    Q_k = (a_k + conj(a_{1-k})) / (sqrt(2) omega_k^{1/2}),
    P_k = -i omega_k^{1/2} (a_k - conj(a_{1-k})) / sqrt(2).

    The reality constraints Q_k = conj(Q_{1-k}) hold automatically for any
    input, so the resulting (q, p) from :func:`idft` are real.
    """
    arr = a.amplitudes if isinstance(a, ModeVector) else np.asarray(a, dtype=complex)
    n = arr.shape[-1]
    if np.any(arr[..., 0] != 0):
        raise ValueError("zero mode a_0 must be exactly 0")
    k = np.arange(1, n) / n
    w = omega(k)
    # conj(a_{1-k}) = reversed conjugate on the k != 0 block
    a_ref = np.conj(arr[..., ::-1])[..., :-1]  # index j -> N-j, j = 1..N-1
    Q = np.zeros(arr.shape, dtype=complex)
    P = np.zeros(arr.shape, dtype=complex)
    Q[..., 1:] = (arr[..., 1:] + a_ref) / (np.sqrt(2) * np.sqrt(w))
    P[..., 1:] = -1j * np.sqrt(w) * (arr[..., 1:] - a_ref) / np.sqrt(2)
    return Q, P


def interaction_coeff(signs: SignTriple, k1: float, k2: float, k3: float) -> float:
    """Coupling coefficient T_{z1,z2,z3}(k1,k2,k3) of the mode equation.

    Returns 0 whenever any argument or the output wavenumber sits at an
    integer (iota kills the zero mode on both sides).
    """
    for x in (k1, k2, k3):
        if not (0.0 <= x < 1.0):
            raise ValueError("torus points must lie in [0,1)")
    z1, z2, z3 = signs.as_tuple()
    u = z1 * k1 + z2 * k2 + z3 * k3
    w_out = omega(u)  # omega is 1-periodic: equals omega(u mod 1)
    val = (
        -z1
        * z2
        * z3
        * 0.25
        * float(iota(u))
        * np.sqrt(w_out)
        * float(iota(k1) * iota(k2) * iota(k3))
        * np.sqrt(omega(k1) * omega(k2) * omega(k3))
    )
    return float(val)


def resonance_factor(query: ResonanceQuery) -> float:
    """Omega = zeta*omega_k - z1*omega_1 - z2*omega_2 - z3*omega_3."""
    z1, z2, z3 = query.signs.as_tuple()
    return float(
        query.zeta * omega(query.k)
        - z1 * omega(query.k1)
        - z2 * omega(query.k2)
        - z3 * omega(query.k3)
    )


def min_offresonance(signs: SignTriple, n_sites: int, chunk: int = 64) -> float:
    """Minimum |Omega| over all momentum-compatible lattice quartets.

    Scans k1,k2,k3 in Z_N intersect (0,1) with k = z1 k1 + z2 k2 + z3 k3
    mod 1 (zeta = +1; the zeta = -1 case is a global sign flip).  For the
    (+,+,-) sign type the exact pairings {k,k3} = {k1,k2} are excluded, and
    the returned minimum is then 0 over the *included* pairing tuples only
    when genuine non-pairing resonances exist (they do not, for this
    dispersion).  For every other type, nothing is excluded.
    """
    if n_sites > 4096:
        raise ValueError("exhaustive scan capped at N = 4096")
    z1, z2, z3 = signs.as_tuple()
    n = n_sites
    w = omega(np.arange(n) / n)
    j1 = np.arange(1, n)
    j2 = np.arange(1, n)
    resonant_type = signs.is_resonant_type()
    best = np.inf
    for lo in range(0, n - 1, chunk):
        j3 = np.arange(1 + lo, min(1 + lo + chunk, n))[:, None, None]
        jj1 = j1[None, :, None]
        jj2 = j2[None, None, :]
        jk = np.mod(z1 * jj1 + z2 * jj2 + z3 * j3, n)
        om = w[jk] - z1 * w[jj1] - z2 * w[jj2] - z3 * w[j3]
        mask = np.ones(om.shape, dtype=bool)
        if resonant_type:
            # Exact pairings {k, k_minus} = {k_a, k_b} where k_minus sits in
            # the minus-signed slot and k_a, k_b in the plus-signed slots.
            slots = {1: jj1 + 0 * j3, 2: jj2 + 0 * j3, 3: j3 + 0 * jj1}
            minus = [i for i, z in enumerate((z1, z2, z3), start=1) if z == -1][0]
            plus = [i for i in (1, 2, 3) if i != minus]
            ji, ja, jb = slots[minus], slots[plus[0]], slots[plus[1]]
            mask &= ~((jk == ja) & (ji == jb))
            mask &= ~((jk == jb) & (ji == ja))
        vals = np.abs(np.where(mask, om, np.inf))
        m = float(vals.min())
        if m < best:
            best = m
    return best
