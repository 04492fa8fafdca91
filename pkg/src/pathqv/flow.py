"""The one-parameter flow of  u' = sigma(tau, u)  and its sensitivities.

``flow(field, tau, xi, t)`` is the value at time t of the solution
starting at xi, with the first argument of sigma frozen at tau.  The
Doss-Sussmann representation of pathwise Ito equations consumes the flow
together with three partial derivatives:

* d/dxi   solves the linear variational equation  v' = sigma_xi(tau, u) v,
  v(0) = 1, hence stays strictly positive (it is an exponential);
* d/dtau  solves  w' = sigma_t(tau, u) + sigma_xi(tau, u) w,  w(0) = 0;
* d2/dt2  is algebraic:  sigma_xi(tau, u) sigma(tau, u)  composed with the
  flow itself -- never a numerical second difference.

The integrator is an embedded Dormand-Prince 5(4) pair with adaptive
steps, run on the time-rescaled system du/ds = t * sigma(tau, u) over
s in [0, 1] so that a whole batch of points with different horizons
(including negative ones: that is the reversed equation) shares one
vectorized solve.  Step control uses the max norm over the batch, which
keeps results independent of batch composition order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FlowIntegrationError

# Dormand-Prince 5(4) tableau (classic ode45 pair, FSAL).
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_ERR = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

#: Default integration tolerances (a notch below the advertised 1e-10 so
#: accumulated global error still meets it on [0, 1]-sized horizons).
RTOL = 1e-11
ATOL = 1e-13

_SAMPLE_T = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
_SAMPLE_XI = np.array([-5.0, -2.0, -0.5, 0.0, 0.5, 2.0, 5.0])


@dataclass(frozen=True)
class VolatilityField:
    """sigma(t, xi) together with its first partial derivatives and
    declared sup-bounds for them.

    ``sigma``, ``sigma_t`` and ``sigma_xi`` must broadcast over numpy
    arrays.  Construction cross-checks each derivative against a central
    difference (h = 1e-5, tolerance 1e-4 relative to 1 + |derivative|)
    and the declared bounds on a fixed sample box; fields whose true
    derivatives grow beyond the box (e.g. sigma(t, xi) = s(t) xi) should
    declare bounds valid on that box.
    """

    sigma: callable
    sigma_t: callable
    sigma_xi: callable
    sup_sigma_t: float
    sup_sigma_xi: float
    name: str = ""

    def __post_init__(self):
        tt, xx = np.meshgrid(_SAMPLE_T, _SAMPLE_XI)
        h = 1e-5
        tol = 1e-4
        d_xi = np.asarray(self.sigma_xi(tt, xx), dtype=np.float64)
        fd_xi = (self.sigma(tt, xx + h) - self.sigma(tt, xx - h)) / (2 * h)
        if np.any(np.abs(fd_xi - d_xi) > tol * (1.0 + np.abs(d_xi))):
            raise DomainError("sigma_xi disagrees with finite differences of sigma")
        d_t = np.asarray(self.sigma_t(tt, xx), dtype=np.float64)
        fd_t = (self.sigma(tt + h, xx) - self.sigma(tt - h, xx)) / (2 * h)
        if np.any(np.abs(fd_t - d_t) > tol * (1.0 + np.abs(d_t))):
            raise DomainError("sigma_t disagrees with finite differences of sigma")
        slack = 1e-9
        if np.max(np.abs(d_t)) > self.sup_sigma_t + slack:
            raise DomainError("declared sup|sigma_t| violated at sampled points")
        if np.max(np.abs(d_xi)) > self.sup_sigma_xi + slack:
            raise DomainError("declared sup|sigma_xi| violated at sampled points")


@dataclass(frozen=True)
class FlowPoint:
    """The flow and its sensitivities at one (tau, xi, t)."""

    value: float
    d_xi: float
    d_tau: float
    d_tt: float

    def __post_init__(self):
        if not np.all(np.asarray(self.d_xi) > 0.0):
            raise FlowIntegrationError(
                "flow sensitivity d_xi must be positive (exponential formula)"
            )


def _integrate_scalar(field, tau, xi, horizon, rtol, atol, max_steps):
    """Plain-float DP45 for a single point; avoids numpy small-array
    overhead in the strictly sequential solvers (Tonelli, shooting traces)."""
    tau = float(tau)
    scale = float(horizon)
    u, v, w = float(xi), 1.0, 0.0
    if scale == 0.0:
        return u, v, w

    sigma, sigma_t, sigma_xi = field.sigma, field.sigma_t, field.sigma_xi

    def rhs(state):
        su, sv, sw = state
        s_val = float(sigma(tau, su))
        s_xi = float(sigma_xi(tau, su))
        s_t = float(sigma_t(tau, su))
        return (scale * s_val, scale * s_xi * sv, scale * (s_t + s_xi * sw))

    s = 0.0
    h = 0.01
    y = (u, v, w)
    k = [None] * 7
    k[0] = rhs(y)
    steps = 0
    while s < 1.0:
        h = min(h, 1.0 - s)
        for i in range(1, 7):
            acc0, acc1, acc2 = y
            for j, a in enumerate(_A[i]):
                if a:
                    kj = k[j]
                    acc0 += h * a * kj[0]
                    acc1 += h * a * kj[1]
                    acc2 += h * a * kj[2]
            k[i] = rhs((acc0, acc1, acc2))
        y5 = list(y)
        y4 = list(y)
        for i in range(7):
            ki = k[i]
            if _B5[i]:
                for c in range(3):
                    y5[c] += h * _B5[i] * ki[c]
            if _B4[i]:
                for c in range(3):
                    y4[c] += h * _B4[i] * ki[c]
        err = 0.0
        for c in range(3):
            tol_c = atol + rtol * max(abs(y[c]), abs(y5[c]))
            err = max(err, abs(y5[c] - y4[c]) / tol_c)
        if not math.isfinite(err):
            raise FlowIntegrationError("non-finite state during flow integration")
        if err <= 1.0:
            s += h
            y = tuple(y5)
            k[0] = k[6]
        factor = 0.9 * err**-0.2 if err > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h < 1e-14:
            raise FlowIntegrationError(
                f"flow step size underflow at s={s:.6f} (pathological field?)"
            )
        steps += 1
        if steps > max_steps:
            raise FlowIntegrationError(f"flow exceeded {max_steps} steps")
    return y


def _integrate(field, tau, xi, horizon, rtol=RTOL, atol=ATOL, max_steps=100000):
    """Vectorized DP45 solve of the augmented (u, v, w) system.

    Returns (phi, d_xi, d_tau) arrays with the broadcast shape of the
    inputs.  One shared adaptive step serves the whole batch.
    """
    if (np.ndim(tau) == 0 and np.ndim(xi) == 0 and np.ndim(horizon) == 0):
        u, v, w = _integrate_scalar(field, tau, xi, horizon, rtol, atol, max_steps)
        return np.float64(u), np.float64(v), np.float64(w)
    tau_b, xi_b, hz_b = np.broadcast_arrays(
        np.asarray(tau, dtype=np.float64),
        np.asarray(xi, dtype=np.float64),
        np.asarray(horizon, dtype=np.float64),
    )
    if tau_b.size == 1:
        u, v, w = _integrate_scalar(
            field, tau_b.reshape(-1)[0], xi_b.reshape(-1)[0], hz_b.reshape(-1)[0],
            rtol, atol, max_steps,
        )
        shape = tau_b.shape
        return (np.full(shape, u), np.full(shape, v), np.full(shape, w))
    shape = tau_b.shape
    tau_f = tau_b.reshape(-1)
    scale = hz_b.reshape(-1)
    m = tau_f.shape[0]

    y = np.zeros((3, m))
    y[0] = xi_b.reshape(-1)
    y[1] = 1.0
    if m == 0 or not np.any(scale):
        return y[0].reshape(shape), y[1].reshape(shape), y[2].reshape(shape)

    def rhs(state):
        u, v, w = state
        s_val = np.asarray(field.sigma(tau_f, u), dtype=np.float64)
        s_xi = np.asarray(field.sigma_xi(tau_f, u), dtype=np.float64)
        s_t = np.asarray(field.sigma_t(tau_f, u), dtype=np.float64)
        return np.stack((scale * s_val, scale * s_xi * v, scale * (s_t + s_xi * w)))

    s = 0.0
    h = 0.01
    k = [None] * 7
    k[0] = rhs(y)
    buf = np.empty_like(y)
    steps = 0
    while s < 1.0:
        h = min(h, 1.0 - s)
        for i in range(1, 7):
            np.multiply(k[0], h * _A[i][0], out=buf)
            for j, a in enumerate(_A[i][1:], start=1):
                if a:
                    buf += (h * a) * k[j]
            buf += y
            k[i] = rhs(buf)
        y5 = y.copy()
        errvec = np.zeros_like(y)
        for i in range(7):
            if _B5[i]:
                y5 += (h * _B5[i]) * k[i]
            if _ERR[i]:
                errvec += (h * _ERR[i]) * k[i]
        tol_scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.max(np.abs(errvec) / tol_scale))
        if not math.isfinite(err):
            raise FlowIntegrationError("non-finite state during flow integration")
        if err <= 1.0:
            s += h
            y = y5
            k[0] = k[6]  # FSAL: stage 7 sits at the accepted point
        factor = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h < 1e-14:
            raise FlowIntegrationError(
                f"flow step size underflow at s={s:.6f} (pathological field?)"
            )
        steps += 1
        if steps > max_steps:
            raise FlowIntegrationError(f"flow exceeded {max_steps} steps")
    return y[0].reshape(shape), y[1].reshape(shape), y[2].reshape(shape)


def flow(field, tau, xi, t, rtol=RTOL, atol=ATOL):
    """phi(tau, xi, t): the flow value alone (broadcasts over arrays)."""
    phi, _, _ = _integrate(field, tau, xi, t, rtol=rtol, atol=atol)
    return float(phi) if np.ndim(phi) == 0 else phi


def flow_with_derivatives(field, tau, xi, t, rtol=RTOL, atol=ATOL):
    """(phi, d_xi, d_tau, d_tt) as arrays; the batch-friendly interface."""
    phi, d_xi, d_tau = _integrate(field, tau, xi, t, rtol=rtol, atol=atol)
    if np.any(d_xi <= 0.0):
        raise FlowIntegrationError("computed d_xi <= 0; integration not trustworthy")
    d_tt = np.asarray(field.sigma_xi(tau, phi)) * np.asarray(field.sigma(tau, phi))
    return phi, d_xi, d_tau, d_tt


def flow_derivatives(field, tau, xi, t, rtol=RTOL, atol=ATOL):
    """FlowPoint at scalar (tau, xi, t)."""
    phi, d_xi, d_tau, d_tt = flow_with_derivatives(field, tau, xi, t, rtol, atol)
    return FlowPoint(float(phi), float(d_xi), float(d_tau), float(d_tt))


# -- ready-made fields -----------------------------------------------------
#
# Field callables may return scalars when the formula does not involve an
# argument (numpy broadcasting absorbs that in all arithmetic); callers
# that need a full-shape array use ``eval_on``.

def eval_on(fn, t, xi):
    """Evaluate a field component and broadcast to the joint shape."""
    shape = np.broadcast_shapes(np.shape(t), np.shape(xi))
    return np.broadcast_to(np.asarray(fn(t, xi), dtype=np.float64), shape)


def constant_field(c):
    """sigma(t, xi) = c; flow is the straight line xi + c t."""
    c = float(c)
    return VolatilityField(
        sigma=lambda t, xi: c,
        sigma_t=lambda t, xi: 0.0,
        sigma_xi=lambda t, xi: 0.0,
        sup_sigma_t=0.0,
        sup_sigma_xi=0.0,
        name=f"const({c:g})",
    )


def scalar_linear_field(sig, dsig, name="linear"):
    """sigma(t, xi) = sig(t) * xi, the geometric (Black-Scholes-type) field.

    ``dsig`` is the derivative of sig.  sigma_t = sig'(t) xi grows linearly
    in xi, so the declared sup-bounds are taken over the validation box
    [0, 1] x [-5, 5].
    """
    tt = np.linspace(0.0, 1.0, 201)
    sup_t = float(np.max(np.abs(np.asarray(dsig(tt), dtype=np.float64)))) * 5.0
    sup_xi = float(np.max(np.abs(np.asarray(sig(tt), dtype=np.float64))))
    return VolatilityField(
        sigma=lambda t, xi: sig(t) * xi,
        sigma_t=lambda t, xi: dsig(t) * xi,
        sigma_xi=lambda t, xi: sig(t) + 0.0 * xi,
        sup_sigma_t=sup_t,
        sup_sigma_xi=sup_xi,
        name=name,
    )


def sqrt1p_field():
    """sigma(xi) = sqrt(1 + xi^2); flow is sinh(t + asinh(xi))."""
    return VolatilityField(
        sigma=lambda t, xi: np.sqrt(1.0 + xi * xi),
        sigma_t=lambda t, xi: 0.0,
        sigma_xi=lambda t, xi: xi / np.sqrt(1.0 + xi * xi),
        sup_sigma_t=0.0,
        sup_sigma_xi=1.0,
        name="sqrt1p",
    )
