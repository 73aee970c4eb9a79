import numpy as np
import pytest

from hnlslab.fields import (
    ComplexField, FieldDataError, Grid, constant_field, gaussian_field,
    spectral_derivative,
)
from hnlslab.evolution import EvolutionProblem, RunConfig, StepperState, run
from hnlslab.observables import (
    energy, sample, verify_conservation, ObservableSeries,
)
from conftest import hnls_grid, nls_grid


def test_constant_field_closed_forms():
    # on a box of area S, u = A: mass = S A^2, energy = -lam S A^4 / 4
    g = Grid((32, 32), (5.0, 8.0), (1.0, -1.0))
    A = 0.7
    f = constant_field(g, A)
    s = sample(f, lam=1.0, sigma=2.0)
    S = 5.0 * 8.0
    assert np.isclose(s.mass, S * A**2, rtol=1e-13)
    assert np.isclose(s.energy, -S * A**4 / 4, rtol=1e-13)
    assert np.isclose(s.lsig2, S * A**4, rtol=1e-13)
    assert s.momentum == (0.0, 0.0)
    assert np.isclose(s.linf, A)


def test_energy_signature_split():
    # E_hyperbolic = E_elliptic - int |u_y|^2 for the same field
    gh = hnls_grid(n=64)
    ge = nls_grid(n=64)
    f = gaussian_field(gh, width=1.3, boost=(0.5, -0.2))
    fe = ComplexField(ge, f.values)
    uy = spectral_derivative(f, 1)
    int_uy2 = f.grid.cell * float(np.sum(np.abs(uy.values) ** 2))
    eh = energy(f, 1.0, 2.0)
    ee = energy(fe, 1.0, 2.0)
    assert np.isclose(eh, ee - int_uy2, rtol=1e-12, atol=1e-12)


def test_symmetric_gaussian_energy_reduces_to_potential_term():
    # x/y kinetic terms cancel under the (1,-1) signature for radially
    # symmetric data, leaving only -lam/4 int |u|^4
    g = hnls_grid()
    f = gaussian_field(g, width=1.0)
    quartic = g.cell * float(np.sum(np.abs(f.values) ** 4))
    assert np.isclose(energy(f, lam=-1.0, sigma=2.0), quartic / 4, rtol=1e-12)
    assert np.isclose(energy(f, lam=1.0, sigma=2.0), -quartic / 4, rtol=1e-12)


def test_boosted_gaussian_momentum():
    g = hnls_grid(n=128, length=40.0)
    k = (0.9, -0.6)
    f = gaussian_field(g, width=1.2, boost=k)
    s = sample(f, 1.0, 2.0)
    for j in range(2):
        assert np.isclose(s.momentum[j], k[j] * s.mass, rtol=1e-10)
    # real data carries no momentum
    s0 = sample(gaussian_field(g, width=1.2), 1.0, 2.0)
    assert abs(s0.momentum[0]) < 1e-12 and abs(s0.momentum[1]) < 1e-12


def test_gauge_invariance_of_densities():
    g = hnls_grid(n=64)
    f = gaussian_field(g, width=1.5, boost=(0.4, 0.1))
    h = f.with_values(f.values * np.exp(1j * 0.7))
    a = sample(f, 1.0, 2.0)
    b = sample(h, 1.0, 2.0)
    for name in ("mass", "energy", "virial", "virial_rate", "lsig2"):
        assert np.isclose(getattr(a, name), getattr(b, name), rtol=1e-12, atol=1e-12)
    assert np.allclose(a.momentum, b.momentum)


def test_virial_sign_weights():
    # x^2 enters with +, y^2 with - when alpha = (1, -1)
    g = hnls_grid(n=64)
    wide_y = gaussian_field(g, width=(1.0, 3.0))
    s = sample(wide_y, 1.0, 2.0)
    assert s.virial < 0
    wide_x = gaussian_field(g, width=(3.0, 1.0))
    assert sample(wide_x, 1.0, 2.0).virial > 0


def test_virial_second_identity_free_gaussian():
    # for a static Gaussian both flux conventions give 0 rate, and the rhs
    # reduces to 16E + 4*lam*((2d+4)/(sigma+2)-d)*P with d=2, sigma=2: 16E
    g = hnls_grid()
    f = gaussian_field(g, width=1.1)
    s = sample(f, 1.0, 2.0)
    assert abs(s.virial_rate) < 1e-10
    assert abs(s.virial_rate_signed) < 1e-10
    assert np.isclose(s.virial_rhs, 16 * s.energy, rtol=1e-12)


def test_sample_rejects_nonfinite():
    g = hnls_grid(n=16)
    v = np.ones(g.n, dtype=complex)
    v[0, 0] = np.inf
    with pytest.raises(FieldDataError):
        sample(ComplexField(g, v), 1.0, 2.0)


def test_boundary_flag_on_offcenter_data():
    g = hnls_grid(n=64, length=40.0)
    s = sample(gaussian_field(g, width=1.0, center=(19.5, 0.0)), 1.0, 2.0)
    assert not s.moments_ok
    assert sample(gaussian_field(g, width=1.0), 1.0, 2.0).moments_ok


def test_series_columns():
    g = hnls_grid(n=16)
    ser = ObservableSeries(lam=1.0, sigma=2.0, alpha=g.alpha)
    for t in (0.0, 0.1, 0.2):
        f = constant_field(g, 1.0, t=t)
        ser.append(sample(f, 1.0, 2.0))
    assert np.allclose(ser.t, [0.0, 0.1, 0.2])
    assert ser.column("momentum", 1).shape == (3,)
    assert len(ser) == 3


def test_verify_conservation_needs_enough_samples():
    g = hnls_grid(n=16)
    ser = ObservableSeries(lam=0.0, sigma=2.0, alpha=g.alpha)
    for t in (0.0, 0.1):
        ser.append(sample(constant_field(g, 1.0, t=t), 0.0, 2.0))
    with pytest.raises(ValueError):
        verify_conservation(ser)


def test_conservation_report_on_nonlinear_run():
    # moving wave packet under the full flow: drifts small, center of mass
    # slope = 2 alpha_j momentum_j, dV/dt matches the dilation-flux form
    g = hnls_grid(n=64, length=40.0)
    f = gaussian_field(g, amplitude=0.8, width=1.3, boost=(0.7, -0.4))
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    cfg = RunConfig(t_end=0.2, dt0=5e-4, sample_stride=20)
    _, series = run(StepperState(field=f, dt=cfg.dt0), problem, cfg)
    rep = verify_conservation(series)
    assert rep.mass_drift < 1e-12
    assert rep.energy_drift < 1e-8
    # momentum is conserved up to aliasing of the nonlinear product
    assert rep.momentum_drift < 1e-6
    for j in range(2):
        assert np.isclose(rep.com_slope[j], rep.com_predicted[j],
                          rtol=2e-4, atol=1e-9)
    # the y center of mass drifts against its momentum (alpha_y < 0)
    assert rep.ysign_matches_flip is True
    # single-factor ratios land at +-2, never +-1
    assert np.isclose(rep.com_single_factor_ratio[0], 2.0, rtol=1e-3)
    assert np.isclose(rep.com_single_factor_ratio[1], -2.0, rtol=1e-3)
    assert rep.rate_convention == "dilation"
    assert rep.virial_rate_residual < 1e-4 * rep.virial_scale
    assert rep.virial_rate_signed_residual > 0.1 * rep.virial_scale
    assert rep.virial_second_residual < 1e-3 * rep.virial_second_scale
    assert rep.moments_ok


def test_conservation_report_elliptic_run():
    # same audit on the all-plus signature: com ratio is +2 on every axis
    g = nls_grid(n=64, length=40.0)
    f = gaussian_field(g, amplitude=0.6, width=1.4, boost=(0.5, 0.3))
    problem = EvolutionProblem(g, lam=-1.0, sigma=2.0)
    cfg = RunConfig(t_end=0.2, dt0=5e-4, sample_stride=20)
    _, series = run(StepperState(field=f, dt=cfg.dt0), problem, cfg)
    rep = verify_conservation(series)
    for j in range(2):
        assert np.isclose(rep.com_single_factor_ratio[j], 2.0, rtol=1e-3)
    assert rep.ysign_matches_flip is None
    assert rep.rate_convention == "dilation"
    assert rep.virial_rate_residual < 1e-4 * rep.virial_scale


def test_energy_with_potential_term():
    g = hnls_grid(n=32)
    X, Y = g.meshgrid()
    V = 0.3 * (X**2 - Y**2)
    f = gaussian_field(g, width=1.0)
    e0 = energy(f, 1.0, 2.0)
    e1 = energy(f, 1.0, 2.0, potential=V)
    extra = 0.5 * g.cell * float(np.sum(V * np.abs(f.values) ** 2))
    assert np.isclose(e1 - e0, extra, rtol=1e-12)
