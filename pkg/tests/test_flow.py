import numpy as np
import pytest

from pathqv import (
    DomainError,
    FlowIntegrationError,
    VolatilityField,
    constant_field,
    flow,
    flow_derivatives,
    flow_with_derivatives,
    scalar_linear_field,
    sqrt1p_field,
)
from pathqv.flow import _integrate


def bs_field():
    return scalar_linear_field(
        lambda t: 0.2 + 0.1 * np.asarray(t, dtype=np.float64),
        lambda t: 0.1 + 0.0 * np.asarray(t, dtype=np.float64),
        name="bs",
    )


def test_constant_field_flow_is_line():
    f = constant_field(0.7)
    for tau in (0.0, 0.5):
        for t in (-1.0, 0.0, 0.25, 1.0):
            assert flow(f, tau, 1.2, t) == pytest.approx(1.2 + 0.7 * t, abs=1e-12)
    fp = flow_derivatives(f, 0.3, -0.4, 0.8)
    assert fp.d_xi == pytest.approx(1.0, abs=1e-12)
    assert fp.d_tau == pytest.approx(0.0, abs=1e-12)
    assert fp.d_tt == pytest.approx(0.0, abs=1e-12)


def test_linear_field_flow_closed_form():
    f = bs_field()
    for tau in (0.0, 0.4, 1.0):
        s = 0.2 + 0.1 * tau
        for xi in (-1.5, 0.3, 2.0):
            for t in (-0.8, 0.5, 1.0):
                want = xi * np.exp(s * t)
                assert flow(f, tau, xi, t) == pytest.approx(want, abs=1e-9)
    tau, xi, t = 0.4, 1.5, 0.9
    fp = flow_derivatives(f, tau, xi, t)
    s = 0.2 + 0.1 * tau
    assert fp.d_xi == pytest.approx(np.exp(s * t), abs=1e-9)
    # differentiate the closed form in tau: xi t sigma'(tau) e^{sigma(tau) t}
    assert fp.d_tau == pytest.approx(xi * t * 0.1 * np.exp(s * t), abs=1e-9)
    fd = (flow(f, tau + 1e-6, xi, t) - flow(f, tau - 1e-6, xi, t)) / 2e-6
    assert fp.d_tau == pytest.approx(fd, abs=1e-5)


def test_sqrt_field_flow_closed_form():
    f = sqrt1p_field()
    for xi in (-2.0, 0.0, 0.5):
        for t in (-1.0, 0.3, 1.0):
            want = np.sinh(t + np.arcsinh(xi))
            assert flow(f, 0.0, xi, t) == pytest.approx(want, abs=1e-9)
    fp = flow_derivatives(f, 0.0, 0.5, 0.7)
    z = np.sinh(0.7 + np.arcsinh(0.5))
    assert fp.d_tt == pytest.approx(z, abs=1e-9)  # sigma_xi * sigma = phi here
    h = 1e-3  # second difference: h small enough for truncation, large
    # enough that the integrator tolerance does not dominate h^2
    fd = (
        flow(f, 0.0, 0.5, 0.7 + h) - 2 * flow(f, 0.0, 0.5, 0.7) + flow(f, 0.0, 0.5, 0.7 - h)
    ) / h**2
    assert fp.d_tt == pytest.approx(fd, abs=1e-5)


def test_semigroup_property():
    rng = np.random.default_rng(12)
    for field in (constant_field(-0.3), bs_field(), sqrt1p_field()):
        for _ in range(8):
            tau = float(rng.uniform(0, 1))
            xi = float(rng.uniform(-2, 2))
            s = float(rng.uniform(-1, 1))
            t = float(rng.uniform(-1, 1))
            mid = flow(field, tau, xi, s)
            assert flow(field, tau, mid, t) == pytest.approx(
                flow(field, tau, xi, s + t), abs=1e-8
            )


def test_reverse_time_identity():
    # phi_t(tau, xi, -t) = phi_xi(tau, xi, -t) sigma(tau, xi)
    rng = np.random.default_rng(21)
    for field in (bs_field(), sqrt1p_field()):
        for _ in range(6):
            tau = float(rng.uniform(0, 1))
            xi = float(rng.uniform(-1.5, 1.5))
            t = float(rng.uniform(-1, 1))
            fp = flow_derivatives(field, tau, xi, -t)
            lhs = float(np.asarray(field.sigma(tau, fp.value)))
            rhs = fp.d_xi * float(np.asarray(field.sigma(tau, xi)))
            assert lhs == pytest.approx(rhs, abs=1e-7)


def test_second_order_reverse_identity():
    # phi_xixi sig^2 - 2 phi_xit sig + phi_tt  (all at -t)
    #   = -phi_xi(-t) * phi_tt at the pulled-back point
    rng = np.random.default_rng(33)
    h = 1e-4
    for field in (bs_field(), sqrt1p_field()):
        for _ in range(5):
            tau = float(rng.uniform(0, 1))
            xi = float(rng.uniform(-1.2, 1.2))
            t = float(rng.uniform(-0.9, 0.9))
            fp = flow_derivatives(field, tau, xi, -t)
            up = flow_derivatives(field, tau, xi + h, -t)
            dn = flow_derivatives(field, tau, xi - h, -t)
            sig = float(np.asarray(field.sigma(tau, xi)))
            phi_xixi = (up.d_xi - dn.d_xi) / (2 * h)
            phi_xit = (
                float(np.asarray(field.sigma(tau, up.value)))
                - float(np.asarray(field.sigma(tau, dn.value)))
            ) / (2 * h)
            lhs = phi_xixi * sig**2 - 2 * phi_xit * sig + fp.d_tt
            fwd = flow_derivatives(field, tau, fp.value, t)
            assert lhs == pytest.approx(-fp.d_xi * fwd.d_tt, abs=1e-5)


def test_d_xi_matches_finite_differences():
    rng = np.random.default_rng(44)
    h = 1e-5
    for field in (bs_field(), sqrt1p_field()):
        for _ in range(5):
            tau = float(rng.uniform(0, 1))
            xi = float(rng.uniform(-1, 1))
            t = float(rng.uniform(-1, 1))
            fp = flow_derivatives(field, tau, xi, t)
            fd = (flow(field, tau, xi + h, t) - flow(field, tau, xi - h, t)) / (2 * h)
            assert fp.d_xi == pytest.approx(fd, abs=1e-5)


def test_d_xi_two_sided_exponential_bounds():
    field = sqrt1p_field()  # sup |sigma_xi| = 1
    rng = np.random.default_rng(55)
    for _ in range(10):
        xi = float(rng.uniform(-2, 2))
        t = float(rng.uniform(-1, 1))
        fp = flow_derivatives(field, 0.0, xi, t)
        assert np.exp(-abs(t)) * (1 - 1e-8) <= fp.d_xi <= np.exp(abs(t)) * (1 + 1e-8)
        assert fp.d_xi > 0.0


def test_batch_matches_scalar():
    field = sqrt1p_field()
    tau = np.zeros(40)
    xi = np.linspace(-2, 2, 40)
    t = np.linspace(-1, 1, 40)
    phi, dxi, dtau, dtt = flow_with_derivatives(field, tau, xi, t)
    want = np.sinh(t + np.arcsinh(xi))
    assert np.max(np.abs(phi - want)) <= 1e-9
    for i in (0, 17, 39):
        assert flow(field, 0.0, float(xi[i]), float(t[i])) == pytest.approx(
            float(phi[i]), abs=1e-10
        )


def test_field_validation_catches_wrong_derivative():
    with pytest.raises(DomainError):
        VolatilityField(
            sigma=lambda t, xi: np.sin(xi) + 0.0 * np.asarray(t),
            sigma_t=lambda t, xi: 0.0 * np.asarray(t) + 0.0 * xi,
            sigma_xi=lambda t, xi: np.cos(xi) + 1.0 + 0.0 * np.asarray(t),  # off by 1
            sup_sigma_t=0.0,
            sup_sigma_xi=2.5,
        )


def test_field_validation_catches_bound_violation():
    with pytest.raises(DomainError):
        VolatilityField(
            sigma=lambda t, xi: np.sin(xi) + 0.0 * np.asarray(t),
            sigma_t=lambda t, xi: 0.0 * np.asarray(t) + 0.0 * xi,
            sigma_xi=lambda t, xi: np.cos(xi) + 0.0 * np.asarray(t),
            sup_sigma_t=0.0,
            sup_sigma_xi=0.5,  # true sup is 1
        )


def test_step_budget_guard():
    field = sqrt1p_field()
    with pytest.raises(FlowIntegrationError):
        _integrate(field, 0.0, 1.0, 1.0, max_steps=3)
    with pytest.raises(FlowIntegrationError):
        _integrate(field, np.zeros(4), np.ones(4), np.ones(4), max_steps=3)


def test_zero_horizon_is_identity():
    field = bs_field()
    fp = flow_derivatives(field, 0.5, 1.3, 0.0)
    assert fp.value == 1.3
    assert fp.d_xi == 1.0
    assert fp.d_tau == 0.0
