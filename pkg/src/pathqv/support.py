"""Support-theorem constructions and the nowhere-differentiability probe.

``shoot_constant_b`` finds a constant drift steering the pathwise Ito
equation  dz = sigma(t, z) dx + b dt  (for a driver with linear quadratic
variation) from z0 to a prescribed z1 at time t0: the hit value is
continuous and monotone in b and sweeps all of R, so bracket doubling
followed by root refinement always lands.  ``match_path`` goes the other
way: given a smooth bounded-variation component B it reads off the
time-dependent drift

    b(t) = phi_xi B'(t) + phi_tau + phi_tt / 2      (at (t, B(t), x(t)))

whose solution reproduces z(t) = phi(t, B(t), x(t)).

``nondiff_quotients`` tracks the dyadic difference quotients
d_n = 2^n (x(s_n') - x(s_n)) of a wedge-series path at a fixed time.
Because rows at and beyond level n vanish on the level-n grid, the
quotients obey an exact one-row recursion

    d_n = d_{n-1} + eps_n * theta[n-1][k*] * 2^((n-1)/2),

with k* the level-(n-1) cell containing t and eps_n = +1 or -1 according
to whether that cell's left or right half contains t (the wedge rises,
then falls).  When the coefficients stay bounded away from zero the
increments blow up, so the quotients cannot converge: the divergence
witness for non-differentiability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dyadic import BVDriver, QVCurve, SampledPath, grid_index, grid_points
from .errors import DomainError, NumericalError
from .flow import flow_with_derivatives
from .ide import IDEProblem, solve_B
from .schauder import synthesize

SHOOT_TOL = 1e-6
MAX_B = 1e6


def _linear_qv_problem(field, x, z0, drift, level):
    return IDEProblem(
        field=field,
        drift=drift,
        driver_A=BVDriver.identity(level),
        x=x.restrict(level),
        qv_x=QVCurve.from_function(lambda t: t, level),
        z0=z0,
    )


def shoot_constant_b(field, x, z0, z1, t0, level, *, tol=SHOOT_TOL,
                     max_b=MAX_B, trace=None):
    """Constant drift b with |z_b(t0) - z1| <= tol, for <x>_t = t.

    Bracket expansion doubles b from +-1 (the comparison bounds guarantee
    z_b(t0) sweeps all of R), then Brent refinement on the monotone map
    b -> z_b(t0).  ``trace``, if given, collects (b, z_b(t0)) pairs.
    """
    level = int(level)
    j = grid_index(t0, level)
    if j == 0:
        raise DomainError("t0 must be positive")
    tgrid = grid_points(level)
    xval = x.restrict(level).values[j]
    warm = [None]  # B for the previous b warm-starts the next Picard solve

    def hit(b):
        problem = _linear_qv_problem(
            field, x, z0, lambda t, xi, b=b: np.full(np.shape(t), float(b)), level
        )
        B = solve_B(problem, level=level, initial=warm[0])
        warm[0] = B.values
        phi, _, _, _ = flow_with_derivatives(field, tgrid[j], B.values[j], xval)
        z = float(phi)
        if trace is not None:
            trace.append((float(b), z))
        return z - z1

    lo, hi = -1.0, 1.0
    f_lo, f_hi = hit(lo), hit(hi)
    while f_lo > 0.0:
        lo *= 2.0
        if abs(lo) > max_b:
            raise NumericalError(f"no bracket below b = -{max_b:g}; hypotheses violated?")
        f_lo = hit(lo)
    while f_hi < 0.0:
        hi *= 2.0
        if abs(hi) > max_b:
            raise NumericalError(f"no bracket above b = {max_b:g}; hypotheses violated?")
        f_hi = hit(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    b_star = float(brentq(hit, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200))
    err = abs(hit(b_star))
    if err > tol:
        raise NumericalError(f"shooting landed {err:.3e} away from the target (tol {tol:g})")
    return b_star


def _derivative_on_grid(values, h):
    """Fourth-order finite differences, one-sided at the boundary."""
    v = values
    if v.shape[0] < 5:
        raise DomainError("need at least 5 grid points to differentiate")
    d = np.empty_like(v)
    d[2:-2] = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * h)
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h)
    d[-2] = (3.0 * v[-1] + 10.0 * v[-2] - 18.0 * v[-3] + 6.0 * v[-4] - v[-5]) / (12.0 * h)
    d[-1] = (25.0 * v[-1] - 48.0 * v[-2] + 36.0 * v[-3] - 16.0 * v[-4] + 3.0 * v[-5]) / (12.0 * h)
    return d


def match_path(target_B, field, x, level=None, *, derivative=None):
    """Drift path b(t) whose solution reproduces phi(t, B(t), x(t)).

    ``target_B`` must be continuously differentiable; pass its derivative
    as a SampledPath (or same-length array) or let fourth-order central
    differences supply it.  Returns b sampled on the working grid.
    """
    if level is None:
        level = min(target_B.level, x.level)
    B = target_B.restrict(level)
    xs = x.restrict(level)
    h = 2.0 ** (-level)
    if derivative is None:
        dB = _derivative_on_grid(B.values, h)
    elif isinstance(derivative, SampledPath):
        dB = derivative.restrict(level).values
    else:
        dB = np.asarray(derivative, dtype=np.float64)
        if dB.shape != B.values.shape:
            raise DomainError("derivative must match the working grid")
    tgrid = grid_points(level)
    _, dxi, dtau, dtt = flow_with_derivatives(field, tgrid, B.values, xs.values)
    bvals = dxi * dB + dtau + 0.5 * dtt
    return SampledPath(level, bvals)


def drift_from_path(bpath):
    """Wrap a sampled drift b(t) as the (t, xi) callable solvers expect."""
    tgrid = bpath.times()
    vals = bpath.values

    def drift(t, xi):
        out = np.interp(np.asarray(t, dtype=np.float64), tgrid, vals)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(t), np.shape(xi))).copy()

    return drift


@dataclass(frozen=True, eq=False)
class NondiffReport:
    """Difference quotients d_n at a point, their exact one-row recursion,
    and the divergence bookkeeping for the non-differentiability argument.

    Arrays are indexed by n = 1..n_max (entry 0 of ``d`` is d_0).
    ``unoriented_increment`` is f_n(s_n) 2^((n-1)/2), the magnitude form
    the divergence argument uses; ``predicted_increment`` carries the
    orientation sign and matches ``increment`` to rounding.
    """

    t: float
    d: np.ndarray
    increment: np.ndarray
    predicted_increment: np.ndarray
    unoriented_increment: np.ndarray
    sign: np.ndarray
    hypothesis_met: np.ndarray
    diverging: np.ndarray
    eps: float
    recursion_defect: float

    @property
    def max_abs_d(self):
        return float(np.max(np.abs(self.d)))


def nondiff_quotients(coeffs, fseq, t, n_max, *, eps=None):
    """Difference quotients of the truncated wedge series at t in [0, 1).

    Verifies the exact recursion (raises NumericalError beyond 1e-10) and
    flags levels where the increment magnitude certifies divergence:
    |d_n - d_{n-1}| >= eps 2^((n-1)/2) whenever |f_n(s_n)| >= eps, which
    contradicts convergence of the quotients.
    """
    t = float(t)
    if not 0.0 <= t < 1.0:
        raise DomainError("t must lie in [0, 1); t = 1 reduces to t = 0 by symmetry")
    n_max = int(n_max)
    if not 1 <= n_max <= coeffs.depth:
        raise DomainError(f"n_max must lie in [1, depth={coeffs.depth}]")
    if eps is None:
        eps = max(1e-12, 0.5 * abs(float(np.asarray(fseq.limit(t)))))
    eps = float(eps)

    path = synthesize(coeffs, coeffs.depth)
    v = path.values

    d = np.empty(n_max + 1)
    for n in range(n_max + 1):
        k = int(np.floor(t * 2**n))
        stride = 2 ** (path.level - n)
        d[n] = 2**n * (v[(k + 1) * stride] - v[k * stride])

    ns = np.arange(1, n_max + 1)
    k_fine = np.floor(t * 2.0**ns).astype(np.int64)
    k_coarse = np.floor(t * 2.0 ** (ns - 1)).astype(np.int64)
    sign = np.where(k_fine % 2 == 0, 1.0, -1.0)
    theta_at = np.array([coeffs.row(n - 1)[k] for n, k in zip(ns, k_coarse)])
    predicted = sign * theta_at * 2.0 ** ((ns - 1) / 2.0)
    increment = np.diff(d)

    scale = 1.0 + np.max(np.abs(predicted))
    defect = float(np.max(np.abs(increment - predicted)))
    if defect > 1e-10 * scale:
        raise NumericalError(
            f"difference-quotient recursion violated by {defect:.3e}"
        )

    s_fine = k_fine * 2.0 ** (-ns.astype(np.float64))
    f_at = np.array([float(np.asarray(fseq.term(int(n), np.array([s]))).ravel()[0])
                     for n, s in zip(ns, s_fine)])
    unoriented_increment = f_at * 2.0 ** ((ns - 1) / 2.0)
    hypothesis = np.abs(f_at) >= eps
    diverging = np.abs(increment) >= eps * 2.0 ** ((ns - 1) / 2.0)
    return NondiffReport(
        t=t, d=d, increment=increment, predicted_increment=predicted,
        unoriented_increment=unoriented_increment, sign=sign, hypothesis_met=hypothesis,
        diverging=diverging, eps=eps, recursion_defect=defect,
    )
