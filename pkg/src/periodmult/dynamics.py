"""Deterministic analysis of the slow-amplitude equation: trajectories,
stationary states, linear stability, thresholds and basins of attraction."""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .errors import StepSizeUnderflow
from .rwa import RwaModel, eom_rhs

STABLE, UNSTABLE, SADDLE = "stable", "unstable", "saddle"
_EIG_TOL = 1e-12
_NO_POINTS = np.empty(0, dtype=np.complex128)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    a: np.ndarray
    n_steps: int
    n_rejected: int
    complete: bool

    @property
    def final(self) -> complex:
        return complex(self.a[-1])


def _kernel_args(model: RwaModel):
    return (float(model.delta), float(model.gamma1), float(model.alpha), complex(model.epsilon),
            int(model.n), model.zeta, float(model.probe_detuning))


def integrate(a0: complex, model: RwaModel, t_final: float, tol: float = 1e-9,
              atol: float | None = None, t0: float = 0.0, store: bool = True,
              max_steps: int = 10**7) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) solution of da/dt = eom_rhs(a, t, model).

    Accepted steps are returned (all of them when ``store``, otherwise only
    the end points). The run stops early, with ``complete=False``, after
    ``max_steps`` accepted steps.
    """
    if not t_final > t0:
        raise ValueError("t_final must exceed the start time")
    if not 1e-14 < tol < 1e-3:
        raise ValueError(f"tol={tol} outside (1e-14, 1e-3)")
    if atol is None:
        atol = tol * 1e-3
    ts, ys, n_acc, n_rej, status, _ = _kernels.dopri5(
        complex(a0), float(t0), float(t_final), tol, atol, 0.0, *_kernel_args(model),
        int(max_steps), bool(store), _NO_POINTS, 0.0)
    if status == _kernels.STATUS_UNDERFLOW:
        raise StepSizeUnderflow(f"step size collapsed at t={ts[-1]}, a={ys[-1]}")
    return Trajectory(ts.copy(), ys.copy(), int(n_acc), int(n_rej),
                      complete=status == _kernels.STATUS_DONE)


def jacobian(a: complex, model: RwaModel) -> np.ndarray:
    """Real 2x2 linearization of eom_rhs over (Re a, Im a)."""
    a = complex(a)
    ac = a.conjugate()
    d_a = 1j * (model.delta + 1j * model.gamma1) + 2j * model.alpha * abs(a) ** 2
    d_ac = 1j * model.alpha * a * a + 1j * (model.n - 1) * model.epsilon * ac ** (model.n - 2)
    dx = d_a + d_ac
    dy = 1j * (d_a - d_ac)
    return np.array([[dx.real, dy.real], [dx.imag, dy.imag]])


def eigenvalues(jac: np.ndarray) -> tuple[complex, complex]:
    """Closed-form eigenvalues of a real 2x2 matrix, larger real part first."""
    half_tr = 0.5 * (jac[0, 0] + jac[1, 1])
    half_diff = 0.5 * (jac[0, 0] - jac[1, 1])
    # (tr/2)^2 - det without the cancellation between nearly equal diagonals
    disc = half_diff * half_diff + jac[0, 1] * jac[1, 0]
    if disc >= 0:
        root = math.sqrt(disc)
        return complex(half_tr + root), complex(half_tr - root)
    root = math.sqrt(-disc)
    return complex(half_tr, root), complex(half_tr, -root)


def classify(eigs) -> str:
    re = [e.real for e in eigs]
    if all(x < -_EIG_TOL for x in re):
        return STABLE
    if min(re) < -_EIG_TOL and max(re) > _EIG_TOL:
        return SADDLE
    return UNSTABLE


@dataclass(frozen=True)
class FixedPoint:
    r: float
    theta: float
    stability: str
    residual: float
    family: int = -1
    eigenvalues: tuple = ()

    @property
    def a(self) -> complex:
        return self.r * cmath.exp(1j * self.theta)

    @property
    def is_origin(self) -> bool:
        return self.r == 0.0


def _make_point(a: complex, theta: float, model: RwaModel, family: int) -> FixedPoint:
    eigs = eigenvalues(jacobian(a, model))
    return FixedPoint(
        r=abs(a),
        theta=theta,
        stability=classify(eigs),
        residual=float(abs(eom_rhs(a, 0.0, model))),
        family=family,
        eigenvalues=eigs,
    )


def amplitude_polynomial(model: RwaModel) -> np.ndarray:
    """Coefficients (highest power first) of
    (delta + alpha u)^2 + Gamma1^2 - |eps|^2 u^(n-2) in u = r^2."""
    n = model.n
    deg = max(2, n - 2)
    coeffs = np.zeros(deg + 1)
    # index from the constant term, reversed at the end
    coeffs[0] += model.delta**2 + model.gamma1**2
    coeffs[1] += 2 * model.alpha * model.delta
    coeffs[2] += model.alpha**2
    coeffs[n - 2] -= abs(model.epsilon) ** 2
    return coeffs[::-1]


def _amplitude_roots(model: RwaModel) -> list[float]:
    poly = amplitude_polynomial(model)
    if not np.any(poly):
        return []
    dpoly = np.polyder(poly)
    out = []
    for root in np.roots(poly):
        if abs(root.imag) > 1e-7 * max(1.0, abs(root)) or root.real <= 0:
            continue
        u = root.real
        for _ in range(20):
            d = np.polyval(dpoly, u)
            if d == 0:
                break
            step = np.polyval(poly, u) / d
            if not math.isfinite(step) or abs(step) > 0.5 * u:
                break
            u -= step
            if abs(step) <= 1e-16 * u:
                break
        if u > 0:
            out.append(u)
    return sorted(out)


def _polish(a: complex, model: RwaModel, iters: int = 8) -> complex:
    best, best_res = a, abs(eom_rhs(a, 0.0, model))
    for _ in range(iters):
        jac = jacobian(a, model)
        f = eom_rhs(a, 0.0, model)
        try:
            dx, dy = np.linalg.solve(jac, [f.real, f.imag])
        except np.linalg.LinAlgError:
            break
        a = a - complex(dx, dy)
        res = abs(eom_rhs(a, 0.0, model))
        if res < best_res:
            best, best_res = a, res
        else:
            break
    return best


def find_fixed_points(model: RwaModel, dedup_tol: float = 1e-8) -> list[FixedPoint]:
    """Origin plus every nontrivial stationary state, grouped in n-fold families.

    Amplitudes come from the polynomial (delta + alpha r^2)^2 + Gamma1^2 =
    |eps|^2 r^(2(n-2)); the phase of each family then follows from
    n theta - arg eps = atan2(Gamma1, -(delta + alpha r^2)), and the other
    members are rotations by 2 pi m / n.
    """
    if model.probe is not None and model.zeta != 0:
        raise ValueError("fixed points are defined for the unprobed model only")
    points = [_make_point(0j, 0.0, model, family=-1)]
    eps_abs = abs(model.epsilon)
    if eps_abs == 0:
        return points
    n = model.n
    arg_eps = cmath.phase(model.epsilon)
    seen: list[complex] = [0j]
    family = 0
    for u in _amplitude_roots(model):
        r = math.sqrt(u)
        psi = math.atan2(model.gamma1, -(model.delta + model.alpha * u))
        theta0 = (arg_eps + psi) / n
        a0 = _polish(r * cmath.exp(1j * theta0), model)
        r, theta0 = abs(a0), cmath.phase(a0)
        if r <= dedup_tol:
            continue
        if any(abs(a0 - s) < dedup_tol for s in seen):
            continue
        for m in range(n):
            theta = (theta0 + 2 * math.pi * m / n) % (2 * math.pi)
            a = r * cmath.exp(1j * theta)
            seen.append(a)
            points.append(_make_point(a, theta, model, family))
        family += 1
    return points


def families(points: list[FixedPoint]) -> dict[int, list[FixedPoint]]:
    out: dict[int, list[FixedPoint]] = {}
    for p in points:
        if p.family >= 0:
            out.setdefault(p.family, []).append(p)
    return out


def stable_points(points: list[FixedPoint]) -> list[FixedPoint]:
    return [p for p in points if p.stability == STABLE]


def leading_rate(model: RwaModel, a: complex = 0j) -> float:
    """Largest real part among the linearization eigenvalues at ``a``."""
    return max(e.real for e in eigenvalues(jacobian(a, model)))


def threshold_n2(gamma1: float, delta: float, rtol: float = 1e-12) -> float:
    """Pump strength |eps| at which the origin of the n=2 model loses stability.

    Found by bisection on the origin's leading eigenvalue; the analytic value
    is sqrt(delta^2 + gamma1^2).
    """
    def rate(eps):
        return leading_rate(RwaModel(2, delta, gamma1, 0.0, eps))

    lo, hi = 0.0, max(abs(delta), gamma1, 1e-300)
    if rate(lo) >= 0:
        return 0.0
    while rate(hi) < 0:
        lo, hi = hi, 2 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if rate(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def existence_boundary(model: RwaModel) -> float:
    """Smallest |eps| for which nontrivial stationary states exist.

    This is the infimum over u > 0 of sqrt(((delta + alpha u)^2 + Gamma1^2) / u^(n-2)).
    For n=5 the infimum is zero: an unbounded large-amplitude branch always
    exists in the truncated equation.
    """
    n = model.n

    def h(logu):
        u = math.exp(logu)
        return ((model.delta + model.alpha * u) ** 2 + model.gamma1**2) / u ** (n - 2)

    grid = np.linspace(-25, 25, 2001)
    vals = np.array([h(x) for x in grid])
    i = int(np.argmin(vals))
    if i in (0, len(grid) - 1):
        return math.sqrt(vals[i])
    res = minimize_scalar(h, bracket=(grid[i - 1], grid[i], grid[i + 1]), tol=1e-12)
    return math.sqrt(min(res.fun, vals[i]))


def with_epsilon(model: RwaModel, eps: complex) -> RwaModel:
    return replace(model, epsilon=complex(eps))


@dataclass(frozen=True)
class BasinMap:
    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray  # (len(y), len(x)); index into attractors, -1 unresolved
    attractors: tuple[FixedPoint, ...]

    def shares(self) -> np.ndarray:
        counts = np.array([(self.labels == k).sum() for k in range(len(self.attractors))])
        return counts / self.labels.size


def basin_sample(model: RwaModel, extent: float, resolution: int, capture_radius: float = 1e-4,
                 t_cap: float | None = None, tol: float = 1e-8, workers: int = 1) -> BasinMap:
    """Label initial conditions on a square grid by the attractor they reach.

    Each cell is integrated until it comes within ``capture_radius`` of a
    stable fixed point or ``t_cap`` (default 50/Gamma1) elapses.
    """
    attractors = tuple(stable_points(find_fixed_points(model)))
    if not attractors:
        raise ValueError("model has no stable fixed point")
    if t_cap is None:
        t_cap = 50.0 / model.gamma1
    targets = np.array([p.a for p in attractors], dtype=np.complex128)
    axis = np.linspace(-extent, extent, resolution)
    args = _kernel_args(model)

    def run_row(iy):
        row = np.empty(resolution, dtype=np.int64)
        for ix, x in enumerate(axis):
            _, _, _, _, status, idx = _kernels.dopri5(
                complex(x, axis[iy]), 0.0, float(t_cap), tol, tol * 1e-3, 0.0, *args,
                10**7, False, targets, float(capture_radius))
            row[ix] = idx if status == _kernels.STATUS_CAPTURED else -1
        return row

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run_row, range(resolution)))
    else:
        rows = [run_row(iy) for iy in range(resolution)]
    return BasinMap(axis, axis.copy(), np.array(rows), attractors)
