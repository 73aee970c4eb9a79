import numpy as np
import pytest

from hnlslab.fields import (
    ComplexField, Grid, GridError, apply_linear_propagator, constant_field,
    gaussian_field, norms, random_smooth_field,
)
from hnlslab.evolution import (
    STATUS_BLOWNUP, STATUS_DONE, EvolutionProblem, FieldTrajectory, RunConfig,
    StepperState, harmonic_saddle_potential, residual_hnls, run, step_strang,
)
from hnlslab.observables import sample
from conftest import hnls_grid


def _run_field(f, problem, **kw):
    cfg = RunConfig(**kw)
    state, series = run(StepperState(field=f, dt=cfg.dt0), problem, cfg)
    return state, series


# --------------------------------------------------------------- exact limits

def test_linear_run_matches_propagator(rng):
    # lam = 0: the split scheme collapses to the exact free flow
    g = hnls_grid(n=32)
    f = random_smooth_field(g, rng)
    problem = EvolutionProblem(g, lam=0.0, sigma=2.0)
    state, _ = _run_field(f, problem, t_end=0.5, dt0=1e-2)
    ref = apply_linear_propagator(f, 0.5)
    assert state.status == STATUS_DONE
    assert np.max(np.abs(state.field.values - ref.values)) < 1e-12
    assert np.isclose(state.t, 0.5)


def test_constant_data_exact_phase():
    # spatially constant u(0) = A evolves as A exp(i lam |A|^sigma t) exactly
    g = hnls_grid(n=16)
    A = 0.9 - 0.3j
    f = constant_field(g, A)
    problem = EvolutionProblem(g, lam=1.5, sigma=2.0)
    state, _ = _run_field(f, problem, t_end=1.0, dt0=1e-2)
    ref = A * np.exp(1j * 1.5 * abs(A) ** 2 * 1.0)
    assert np.max(np.abs(state.field.values - ref)) < 1e-11


def test_bright_soliton_benchmark():
    # d=1, alpha=(1), lam=2, sigma=2: u = sech(x) e^{it} is exact
    g = Grid((512,), (40 * np.pi,), (1.0,))
    x = g.coords[0]
    f = ComplexField(g, 1.0 / np.cosh(x))
    problem = EvolutionProblem(g, lam=2.0, sigma=2.0)
    state, _ = _run_field(f, problem, t_end=1.0, dt0=1e-3)
    ref = np.exp(1j * 1.0) / np.cosh(x)
    err = np.sqrt(g.cell * np.sum(np.abs(state.field.values - ref) ** 2))
    assert err < 1e-6


def test_mass_conservation_long_run():
    g = hnls_grid(n=64)
    f = gaussian_field(g, amplitude=0.8, width=1.3, boost=(0.5, -0.3))
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    state, series = _run_field(f, problem, t_end=1.0, dt0=1e-3,
                               sample_stride=100)
    m = series.column("mass")
    assert np.max(np.abs(m - m[0])) < 1e-10 * m[0]
    assert state.step_count == 1000


def test_time_reversal():
    g = hnls_grid(n=32)
    f = gaussian_field(g, amplitude=0.7, width=1.2)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    fwd, _ = _run_field(f, problem, t_end=0.3, dt0=1e-3)
    back, _ = _run_field(fwd.field, problem, t_end=0.0, dt0=1e-3)
    assert back.status == STATUS_DONE
    assert np.isclose(back.t, 0.0, atol=1e-12)
    assert np.max(np.abs(back.field.values - f.values)) < 1e-10


def test_strang_second_order():
    g = hnls_grid(n=32)
    f = gaussian_field(g, amplitude=0.8, width=1.2)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    ref, _ = _run_field(f, problem, t_end=0.2, dt0=2e-5)
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        st, _ = _run_field(f, problem, t_end=0.2, dt0=dt)
        errs.append(np.max(np.abs(st.field.values - ref.field.values)))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    for p in orders:
        assert 1.8 < p < 2.2, f"observed order {orders}"


# ----------------------------------------------------------------- residuals

def test_residual_small_on_true_solution():
    g = hnls_grid(n=64)
    f = gaussian_field(g, amplitude=0.8, width=1.3)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    h = 1e-3
    center, _ = _run_field(f, problem, t_end=0.1, dt0=1e-4)
    minus, _ = _run_field(center.field, problem, t_end=0.1 - h, dt0=1e-4)
    plus, _ = _run_field(center.field, problem, t_end=0.1 + h, dt0=1e-4)
    r = residual_hnls(minus.field, center.field, plus.field, problem)
    assert r < 1e-4  # O(h^2) with a modest constant

    # a random triple is nowhere near a solution
    rngl = np.random.default_rng(3)
    bogus = [f.with_values(random_smooth_field(g, rngl).values, t=t)
             for t in (0.099, 0.1, 0.101)]
    assert residual_hnls(*bogus, problem) > 1.0


def test_residual_validates_inputs():
    g = hnls_grid(n=16)
    g2 = hnls_grid(n=32)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    a = constant_field(g, 1.0, t=0.0)
    b = constant_field(g, 1.0, t=0.1)
    c = constant_field(g, 1.0, t=0.2)
    with pytest.raises(GridError):
        residual_hnls(constant_field(g2, 1.0), b, c, problem)
    with pytest.raises(ValueError):
        residual_hnls(c, b, a, problem)  # stamps out of order
    with pytest.raises(ValueError):
        residual_hnls(a, b, constant_field(g, 1.0, t=0.5), problem)  # uncentered


# -------------------------------------------------------------------- blow-up

def test_focusing_blowup_detected_and_timed():
    # elliptic focusing, negative energy: variance vanishes by
    # t* = sqrt(V0 / (-8E)) and the amplitude diverges before then
    g = Grid((64, 64), (8.0, 8.0), (1.0, 1.0))
    f = gaussian_field(g, amplitude=3.0, width=1.0)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    s0 = sample(f, 1.0, 2.0)
    assert s0.energy < 0
    t_star = np.sqrt(s0.virial / (-8.0 * s0.energy))
    state, series = _run_field(f, problem, t_end=float(t_star), dt0=1e-3,
                               adapt=True, linf_ceiling=15.0)
    assert state.status == STATUS_BLOWNUP
    assert state.t_detect is not None
    assert state.t_detect < t_star
    # run() must have kept every emitted sample finite
    assert all(np.isfinite(s.linf) for s in series.samples)


def test_detection_time_monotone_in_ceiling():
    g = Grid((64, 64), (8.0, 8.0), (1.0, 1.0))
    f = gaussian_field(g, amplitude=3.0, width=1.0)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    times = []
    for ceiling in (8.0, 15.0):
        state, _ = _run_field(f, problem, t_end=0.45, dt0=2e-4,
                              linf_ceiling=ceiling)
        assert state.status == STATUS_BLOWNUP
        times.append(state.t_detect)
    assert times[0] <= times[1]


def test_defocusing_run_stays_bounded():
    g = hnls_grid(n=32)
    f = gaussian_field(g, amplitude=1.5, width=1.0)
    problem = EvolutionProblem(g, lam=-1.0, sigma=2.0)
    state, _ = _run_field(f, problem, t_end=1.0, dt0=1e-3, adapt=True)
    assert state.status == STATUS_DONE


# ------------------------------------------------------------------ potential

def test_saddle_potential_shape():
    g = hnls_grid(n=64, length=40.0)
    V = harmonic_saddle_potential(g, k=0.5)
    X, Y = g.meshgrid()
    center = np.unravel_index(np.argmin(X**2 + Y**2), g.n)
    assert V[center] == 0.0
    # exact quadratic well inside the flat region
    i = np.searchsorted(g.coords[0], 3.0)
    j = np.searchsorted(g.coords[1], -2.0)
    x, y = g.coords[0][i], g.coords[1][j]
    assert np.isclose(V[i, j], 0.5 * (x**2 - y**2), rtol=1e-12)
    # tapered to zero on the boundary ring
    assert abs(V[0, 0]) < 1e-12
    assert np.max(np.abs(V[0, :])) < 1e-12


def test_potential_changes_dynamics_and_energy_is_conserved():
    g = hnls_grid(n=64)
    V = harmonic_saddle_potential(g, k=0.3)
    f = gaussian_field(g, amplitude=0.5, width=1.2)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0, potential=V)
    state, series = _run_field(f, problem, t_end=0.5, dt0=5e-4,
                               sample_stride=50)
    e = series.column("energy")
    assert np.max(np.abs(e - e[0])) < 1e-7 * max(1.0, abs(e[0]))
    free, _ = _run_field(f, EvolutionProblem(g, lam=1.0, sigma=2.0),
                         t_end=0.5, dt0=5e-4)
    assert np.max(np.abs(free.field.values - state.field.values)) > 1e-3


def test_potential_shape_validated():
    g = hnls_grid(n=16)
    with pytest.raises(GridError):
        EvolutionProblem(g, lam=1.0, sigma=2.0, potential=np.zeros((8, 8)))


# ----------------------------------------------------------------- trajectory

def test_trajectory_interpolation():
    g = hnls_grid(n=16)
    times = np.linspace(0.0, 1.0, 9)
    # field values polynomial in t (degree 3) -> 4-point Lagrange is exact
    base = gaussian_field(g, width=1.5).values
    traj = FieldTrajectory()
    for t in times:
        traj.append(ComplexField(g, (1.0 + 2 * t + t**3) * base, t=t))
    mid = traj.at(0.4375)
    expected = (1.0 + 2 * 0.4375 + 0.4375**3) * base
    assert np.max(np.abs(mid.values - expected)) < 1e-12
    node = traj.at(0.5)
    assert np.max(np.abs(node.values - (1.0 + 1.0 + 0.125) * base)) < 1e-14
    assert traj.t_min == 0.0 and traj.t_max == 1.0


def test_trajectory_validation():
    g = hnls_grid(n=16)
    traj = FieldTrajectory([constant_field(g, 1.0, t=0.0),
                            constant_field(g, 1.0, t=0.1)])
    with pytest.raises(ValueError):
        traj.append(constant_field(g, 1.0, t=0.05))
    with pytest.raises(GridError):
        traj.append(constant_field(hnls_grid(n=32), 1.0, t=0.2))
    with pytest.raises(ValueError):
        traj.at(-0.5)
    with pytest.raises(ValueError):
        traj.at(0.05)  # inside range but too few snapshots for cubic


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(t_end=1.0, dt0=-1e-3)
    with pytest.raises(ValueError):
        RunConfig(t_end=1.0, dt0=1e-3, sample_stride=0)
    with pytest.raises(ValueError):
        RunConfig(t_end=-1.0, dt0=1e-3, adapt=True)


def test_step_strang_stamps_time():
    g = hnls_grid(n=16)
    problem = EvolutionProblem(g, lam=1.0, sigma=2.0)
    st = StepperState(field=constant_field(g, 0.5), dt=0.01)
    st = step_strang(st, problem)
    assert np.isclose(st.t, 0.01)
    assert st.step_count == 1
    st = step_strang(st, problem, direction=-1.0)
    assert np.isclose(st.t, 0.0, atol=1e-15)
