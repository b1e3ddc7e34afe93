"""Collision operator of the FPUT wave kinetic equation, and its solver.

The operator acts on a positive spectrum phi on the torus:

    K(phi)(k) = int delta(w1 + w2 - w3 - w) |3 T_{+,+,-}|^2
                phi*phi1*phi2*phi3 * (1/phi - 1/phi1 - 1/phi2 + 1/phi3)
                dxi1 dxi2,

integrated over {xi1 + xi2 - xi3 = k mod 1} with w = 2 sin(pi xi).  Writing
x = xi1, y = xi2, the momentum constraint splits into three sheets by how
the sum wraps:

    U_+      : xi3 = x + y - k        (k <= x+y < k+1)
    U_-^-    : xi3 = x + y - k + 1    (x+y < k)
    U_-^+    : xi3 = x + y - k - 1    (x+y >= k+1)

On U_+ every zero of Omega = w1+w2-w3-w has {x,y} = {xi3,k}, where the
phi-bracket vanishes, so the delta collects no mass there.  On each U_-
sheet, Omega(x, .) is strictly monotone in y (its y-derivative
2 pi [cos(pi y) + cos(pi(x+y-k))] has one sign on the sheet), so there is a
unique root y(x) for every admissible x, found here by bisection to 1e-12.
The delta then contributes f(x, y(x)) / |d_y Omega| integrated over x; the
square-root-type endpoint behaviour in x is flattened with the substitution
x = a + (b-a) sin^2(theta) and a midpoint rule in theta.

``collision_broadened`` replaces the delta by t*Psi(t*Omega) and integrates
over the full 2-d domain (all three sheets).  For the default Cauchy
mollifier the y-line integrals are evaluated from closed-form primitives on
a piecewise-linear model of (Omega, integrand), so the Lorentzian core is
never undersampled no matter how large t is; the y-grid is refined around
the resonant roots.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .spectral import omega

__all__ = [
    "SpectrumGrid",
    "MollifierProfile",
    "ResonantBranch",
    "resonant_sheets",
    "collision_operator",
    "collision_broadened",
    "collision_operator_grid",
    "wke_solve",
    "conserved_functionals",
    "spectrum_to_csv",
    "save_trajectory",
]

SHEETS = ("U_plus", "U_minus_minus", "U_minus_plus")
ROOT_TOL = 1e-12


@dataclass
class SpectrumGrid:
    """Positive spectrum n(xi_i) on the uniform torus grid xi_i = i/m."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.shape[0] < 16:
            raise ValueError("need a 1-d grid with m >= 16")
        if not np.all(self.values > 0):
            raise ValueError("spectrum must be strictly positive")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def xi(self) -> np.ndarray:
        return np.arange(self.m) / self.m

    def spline(self) -> CubicSpline:
        x = np.append(self.xi, 1.0)
        v = np.append(self.values, self.values[0])
        return CubicSpline(x, v, bc_type="periodic")

    @classmethod
    def from_function(cls, fn, m: int = 256) -> "SpectrumGrid":
        return cls(np.asarray(fn(np.arange(m) / m), dtype=float))


@dataclass(frozen=True)
class MollifierProfile:
    """Broadening kernel Psi with unit mass and |Psi(u)| <~ <u>^-2.

    ``primitive`` is the antiderivative of Psi and ``u_primitive`` that of
    u*Psi(u); both are needed by the closed-form line integrator.
    """

    name: str = "cauchy"

    def psi(self, u):
        return 1.0 / (np.pi * (1.0 + np.asarray(u, dtype=float) ** 2))

    def primitive(self, u):
        return np.arctan(np.asarray(u, dtype=float)) / np.pi

    def u_primitive(self, u):
        return np.log1p(np.asarray(u, dtype=float) ** 2) / (2.0 * np.pi)

    def normalization(self, half_width: float = 1e8) -> float:
        """Total mass as the quadrature sees it (primitive difference)."""
        return float(self.primitive(half_width) - self.primitive(-half_width))


@dataclass
class ResonantBranch:
    """One resolved branch of the resonant manifold at fixed output k."""

    branch_id: str  # "U_minus_minus" or "U_minus_plus"
    k: float
    x: np.ndarray          # nodes in x (open interval of the sheet)
    x_weight: np.ndarray   # quadrature weight dx/dtheta * dtheta per node
    y: np.ndarray          # solved root y(x)
    z: np.ndarray
    dy_omega: np.ndarray   # d_y Omega at the root

    def max_residual(self) -> float:
        return float(np.max(np.abs(_omega_sheet(self.x, self.y, self.k, self.branch_id))))


def _sheet_z(x, y, k, sheet):
    if sheet == "U_plus":
        return x + y - k
    if sheet == "U_minus_minus":
        return x + y - k + 1.0
    if sheet == "U_minus_plus":
        return x + y - k - 1.0
    raise ValueError(f"unknown sheet {sheet}")


def _omega_sheet(x, y, k, sheet):
    """Omega = w(x) + w(y) - w(z) - w(k) on the given sheet (full dispersion)."""
    z = _sheet_z(x, y, k, sheet)
    return (
        2.0 * np.sin(np.pi * x)
        + 2.0 * np.sin(np.pi * y)
        - 2.0 * np.sin(np.pi * z)
        - 2.0 * np.sin(np.pi * k)
    )


def _dy_omega_sheet(x, y, k, sheet):
    z = _sheet_z(x, y, k, sheet)
    return 2.0 * np.pi * (np.cos(np.pi * y) - np.cos(np.pi * z))


def _kernel_weight(k, x, y, z):
    """|3 T_{+,+,-}|^2 = (9/16) w_k w_x w_y w_z (iota signs square away)."""
    return (9.0 / 16.0) * omega(k) * omega(x) * omega(y) * omega(z)


def _bracket(phi_spline, k, x, y, z):
    pk = phi_spline(np.mod(k, 1.0))
    p1 = phi_spline(np.mod(x, 1.0))
    p2 = phi_spline(np.mod(y, 1.0))
    p3 = phi_spline(np.mod(z, 1.0))
    return pk * p1 * p2 * p3 * (1.0 / pk - 1.0 / p1 - 1.0 / p2 + 1.0 / p3)


def _bisect_root(x, k, sheet, n_iter: int = 52):
    """Unique root y(x) of Omega on a U_- sheet, vectorized bisection."""
    eps = 1e-13
    if sheet == "U_minus_minus":
        lo = np.full_like(x, eps)
        hi = (k - x) - eps
    else:
        lo = (k + 1.0 - x) + eps
        hi = np.full_like(x, 1.0 - eps)
    f_lo = _omega_sheet(x, lo, k, sheet)
    ok = f_lo * _omega_sheet(x, hi, k, sheet) <= 0
    if not np.all(ok):
        bad = np.nonzero(~ok)[0]
        raise ArithmeticError(
            f"no sign change for root bracketing on {sheet} at x = {x[bad[:3]]}"
        )
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        f_mid = _omega_sheet(x, mid, k, sheet)
        take_lo = (f_lo * f_mid) <= 0
        hi = np.where(take_lo, mid, hi)
        lo = np.where(take_lo, lo, mid)
        f_lo = np.where(take_lo, f_lo, f_mid)
    return 0.5 * (lo + hi)


def resonant_sheets(k: float) -> list[str]:
    """Sheets carrying delta mass at this k (the U_- pair; U_+ carries none)."""
    return ["U_minus_minus", "U_minus_plus"]


def _branch(k: float, sheet: str, n_theta: int) -> ResonantBranch | None:
    if sheet == "U_minus_minus":
        a, b = 0.0, k
    elif sheet == "U_minus_plus":
        a, b = k, 1.0
    else:
        raise ValueError("only U_- sheets carry a resonant branch")
    if b - a < 1e-9:
        return None
    theta = (np.arange(n_theta) + 0.5) * (np.pi / 2) / n_theta
    x = a + (b - a) * np.sin(theta) ** 2
    w = (b - a) * np.sin(2 * theta) * (np.pi / 2) / n_theta
    y = _bisect_root(x, k, sheet)
    z = _sheet_z(x, y, k, sheet)
    dyo = _dy_omega_sheet(x, y, k, sheet)
    if np.any(np.abs(dyo) < 1e-12):
        bad = x[np.abs(dyo) < 1e-12]
        raise ArithmeticError(f"vanishing root weight on {sheet} at x = {bad[:3]}")
    return ResonantBranch(sheet, k, x, w, y, z, dyo)


def collision_operator(phi: SpectrumGrid, k: float, n_theta: int = 384) -> float:
    """Evaluate K(phi)(k) as a line integral over the resonant branches."""
    k = float(np.mod(k, 1.0))
    if k == 0.0 or min(k, 1.0 - k) < 1e-12:
        return 0.0
    spline = phi.spline()
    total = 0.0
    for sheet in resonant_sheets(k):
        br = _branch(k, sheet, n_theta)
        if br is None:
            continue
        f = _kernel_weight(k, br.x, br.y, br.z) * _bracket(spline, k, br.x, br.y, br.z)
        total += float(np.sum(br.x_weight * f / np.abs(br.dy_omega)))
    return total


def collision_operator_grid(phi: SpectrumGrid, n_theta: int = 384) -> np.ndarray:
    """K(phi) on phi's own grid points."""
    return np.array([collision_operator(phi, x, n_theta=n_theta) for x in phi.xi])


def _line_integral_lorentz(psi: MollifierProfile, t, om, f, y):
    """int t*Psi(t*Omega(y)) f(y) dy with Omega, f piecewise linear on y.

    Exact per interval via the primitives of Psi and u Psi(u), so arbitrarily
    narrow Lorentzian cores are integrated without resolution loss.
    """
    dy = np.diff(y)
    g = np.diff(om) / dy  # slope of Omega
    df = np.diff(f) / dy
    u0 = t * om[:-1]
    u1 = t * om[1:]
    steep = np.abs(u1 - u0) > 1e-8
    gs = np.where(steep, g, 1.0)
    P = psi.primitive
    Q = psi.u_primitive
    dP = P(u1) - P(u0)
    dQ = Q(u1) - Q(u0)
    # int t Psi ds and int t Psi s ds over the interval (s local coordinate)
    i0 = dP / gs
    i1 = (dQ / t - om[:-1] * dP) / gs**2
    flat_density = t * psi.psi(0.5 * (u0 + u1))
    i0 = np.where(steep, i0, flat_density * dy)
    i1 = np.where(steep, i1, flat_density * 0.5 * dy**2)
    return float(np.sum(f[:-1] * i0 + df * i1))


def _y_grid_for_sheet(x, k, sheet, t, base: int):
    """y nodes on the sheet's y-interval, refined around resonant roots."""
    if sheet == "U_plus":
        lo = max(0.0, k - x)
        hi = min(1.0, k + 1.0 - x)
        roots = [k] if lo < k < hi else []
    elif sheet == "U_minus_minus":
        lo, hi = 0.0, k - x
        roots = [float(_bisect_root(np.array([x]), k, sheet)[0])] if hi > 1e-9 else []
    else:
        lo, hi = k + 1.0 - x, 1.0
        roots = [float(_bisect_root(np.array([x]), k, sheet)[0])] if hi - lo > 1e-9 else []
    if hi - lo < 1e-9:
        return None
    pts = [np.linspace(lo, hi, base)]
    width = hi - lo
    for r in roots:
        offs = (0.2 / t) * 1.7 ** np.arange(0, 26)
        offs = offs[offs < width]
        cluster = np.concatenate([r - offs, [r], r + offs])
        pts.append(cluster)
    y = np.unique(np.clip(np.concatenate(pts), lo, hi))
    return y


def collision_broadened(
    phi: SpectrumGrid,
    k: float,
    t: float,
    psi: MollifierProfile | None = None,
    n_x: int = 512,
    n_y_base: int = 512,
    sheets=SHEETS,
) -> float:
    """t * int |3T|^2 (bracket) Psi(t Omega) dxi1 dxi2 over the given sheets."""
    if t < 1.0:
        raise ValueError("broadening scale t must be >= 1")
    k = float(np.mod(k, 1.0))
    if k == 0.0:
        return 0.0
    psi = psi or MollifierProfile()
    spline = phi.spline()
    total = 0.0
    for sheet in sheets:
        # x-range on which the sheet has nonempty y-interval
        if sheet == "U_minus_minus":
            xa, xb = 0.0, k
        elif sheet == "U_minus_plus":
            xa, xb = k, 1.0
        else:
            xa, xb = 0.0, 1.0
        if xb - xa < 1e-9:
            continue
        if sheet == "U_plus":
            # Omega vanishes on the whole line x = k; refine x around it.
            offs = (0.1 / t) * 1.6 ** np.arange(0, 34)
            offs = offs[offs < max(k - xa, xb - k)]
            nodes = np.concatenate(
                [np.linspace(xa, xb, n_x), k - offs, k + offs, [k]]
            )
            xs = np.unique(np.clip(nodes, xa, xb))
            xw = np.zeros_like(xs)
            d = np.diff(xs)
            xw[:-1] += 0.5 * d
            xw[1:] += 0.5 * d
        else:
            theta = (np.arange(n_x) + 0.5) * (np.pi / 2) / n_x
            xs = xa + (xb - xa) * np.sin(theta) ** 2
            xw = (xb - xa) * np.sin(2 * theta) * (np.pi / 2) / n_x
        acc = 0.0
        for x, w in zip(xs, xw):
            y = _y_grid_for_sheet(x, k, sheet, t, n_y_base)
            if y is None:
                continue
            z = _sheet_z(x, y, k, sheet)
            om = _omega_sheet(x, y, k, sheet)
            f = _kernel_weight(k, x, y, z) * _bracket(spline, k, x, y, z)
            acc += w * _line_integral_lorentz(psi, t, om, f, y)
        total += acc
    return total


def conserved_functionals(n: SpectrumGrid) -> tuple[float, float]:
    """(mass, energy) = (int n dxi, int omega n dxi) by the periodic trapezoid."""
    mass = float(np.mean(n.values))
    energy = float(np.mean(omega(n.xi) * n.values))
    return mass, energy


def wke_solve(
    n0: SpectrumGrid,
    beta: float,
    t_end: float,
    dt: float,
    n_theta: int = 256,
    dt_floor_factor: float = 1e-3,
    store_every: int = 1,
):
    """Integrate d n/dtau = K(n) in kinetic time tau with classical RK4.

    Returns (taus, snapshots); physical time is tau * T_kin = tau/(4 pi
    beta^2).  If a step loses positivity it is retried with half the step,
    down to ``dt * dt_floor_factor``, after which the run aborts with a
    diagnostic.
    """
    if t_end < 0 or dt <= 0:
        raise ValueError("need t_end >= 0 and dt > 0")

    def rhs(vals):
        return collision_operator_grid(SpectrumGrid(vals), n_theta=n_theta)

    taus = [0.0]
    snaps = [SpectrumGrid(n0.values.copy())]
    tau = 0.0
    vals = n0.values.copy()
    h = dt
    steps_done = 0
    while tau < t_end - 1e-12:
        h = min(h, t_end - tau)
        k1 = rhs(vals)
        k2 = rhs(vals + 0.5 * h * k1)
        k3 = rhs(vals + 0.5 * h * k2)
        k4 = rhs(vals + h * k3)
        new = vals + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.any(new <= 0):
            h *= 0.5
            if h < dt * dt_floor_factor:
                raise ArithmeticError(
                    f"positivity lost at tau = {tau:.4g} even at dt = {h:.3g}; "
                    f"min value {new.min():.3g}"
                )
            continue
        vals = new
        tau += h
        steps_done += 1
        if steps_done % store_every == 0 or tau >= t_end - 1e-12:
            taus.append(tau)
            snaps.append(SpectrumGrid(vals.copy()))
    return np.asarray(taus), snaps


def spectrum_to_csv(n: SpectrumGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "n"])
        for x, v in zip(n.xi, n.values):
            w.writerow([repr(x), repr(v)])


def save_trajectory(taus, snaps, out_dir, beta: float, dt: float) -> None:
    """Snapshot CSVs plus a JSON manifest (m, beta, dt, kinetic-time grid)."""
    os.makedirs(out_dir, exist_ok=True)
    for i, (tau, snap) in enumerate(zip(taus, snaps)):
        spectrum_to_csv(snap, os.path.join(out_dir, f"spectrum_{i:05d}.csv"))
    manifest = {
        "m": int(snaps[0].m),
        "beta": beta,
        "dt": dt,
        "tau_grid": [float(t) for t in taus],
        "files": [f"spectrum_{i:05d}.csv" for i in range(len(taus))],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
