"""ETD integrator: exactness, invariants, window detection, diagnostics."""

import numpy as np
import pytest

from zzlab.errors import BlowUp, ValidationError, WindowNotFound
from zzlab.kernels import build_branch_interpolant
from zzlab.roll import Params, solve_roll
from zzlab.sim import (
    HNormDiagnostics,
    PerturbationSpec,
    SimConfig,
    SimState,
    Stepper,
    bloch_project,
    detect_window,
    embed_roll,
    make_perturbation,
    run_decay_experiment,
)

PARAMS = Params(eps=0.2, kappa=0.0)


def small_config(**kw):
    base = dict(
        params=PARAMS,
        m_x=4,
        l_y=25.0,
        n_x=64,
        n_y=32,
        dt=0.25,
        t_end=10.0,
        perturbation=PerturbationSpec(amplitude=1e-4),
        n_modes=16,
    )
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValidationError):
        small_config(n_x=60)
    with pytest.raises(ValidationError):
        small_config(n_y=48)
    with pytest.raises(ValidationError):
        small_config(m_x=3)  # n_x = 64 not a multiple of 3
    with pytest.raises(ValidationError):
        small_config(dt=-0.1)
    with pytest.raises(ValidationError):
        PerturbationSpec(amplitude=-1.0)


def test_zero_is_a_fixed_point():
    stepper = Stepper(small_config())
    state = SimState(t=0.0, u_hat=np.zeros_like(stepper.symbol, dtype=complex))
    for _ in range(5):
        state = stepper.step(state)
    assert np.abs(state.u_hat).max() == 0.0


def test_linear_step_is_exact():
    """With the cubic term off, a single dealias-resolved mode evolves by the
    exact exponential of its symbol."""
    cfg = small_config()
    stepper = Stepper(cfg, nonlinear=False)
    u_hat = np.zeros_like(stepper.symbol, dtype=complex)
    ix, iy = 4, 3  # inside the dealias mask on this grid
    assert stepper.dealias[ix, iy]
    u_hat[ix, iy] = 1.0
    state = SimState(t=0.0, u_hat=stepper._symmetrize(u_hat))
    amp0 = abs(state.u_hat[ix, iy])
    n = 20
    for _ in range(n):
        state = stepper.step(state)
    expected = amp0 * np.exp(stepper.symbol[ix, iy] * n * cfg.dt)
    assert abs(state.u_hat[ix, iy]) == pytest.approx(expected, rel=1e-12)


def test_roll_is_near_stationary():
    cfg = small_config()
    roll = solve_roll(PARAMS, n_modes=16)
    stepper = Stepper(cfg)
    up = embed_roll(stepper, roll)
    state = SimState(t=0.0, u_hat=stepper.to_spectral(up))
    for _ in range(40):
        state = stepper.step(state)
    drift = np.abs(stepper.to_physical(state.u_hat) - up).max()
    assert drift <= 1e-10


def test_field_stays_real():
    cfg = small_config()
    roll = solve_roll(PARAMS, n_modes=16)
    stepper = Stepper(cfg)
    u = embed_roll(stepper, roll) + make_perturbation(
        stepper, roll, cfg.perturbation
    )
    state = SimState(t=0.0, u_hat=stepper.to_spectral(u))
    for _ in range(40):
        state = stepper.step(state)
    # rfft2 columns ky=0 and ky=Nyquist must stay Hermitian so that the
    # inverse transform loses nothing.
    for col in (0, -1):
        c = state.u_hat[:, col]
        np.testing.assert_allclose(
            c, np.conj(np.roll(c[::-1], 1)), atol=1e-13 * np.abs(c).max()
        )


def test_blowup_guard():
    cfg = small_config()
    stepper = Stepper(cfg)
    state = SimState(t=0.0, u_hat=stepper.to_spectral(np.ones((cfg.n_x, cfg.n_y))))
    stepper.check_blowup(state)  # sets the reference scale
    state.u_hat *= 100.0
    with pytest.raises(BlowUp):
        stepper.check_blowup(state)


def test_cfl_guard():
    cfg = small_config(dt=50.0, perturbation=PerturbationSpec(amplitude=1.0))
    with pytest.raises(ValidationError):
        run_decay_experiment(cfg)


def test_zero_perturbation_has_no_window():
    cfg = small_config(perturbation=PerturbationSpec(amplitude=0.0))
    with pytest.raises(WindowNotFound):
        run_decay_experiment(cfg)


def test_detect_window_exact_power_law():
    ts = np.geomspace(1.0, 1e4, 80)
    t_lo, t_hi, slope = detect_window(ts, 5.0 * ts**-0.75, burn_in=0.0)
    assert slope == pytest.approx(-0.75, abs=1e-10)
    assert t_hi / t_lo >= 10.0


def test_detect_window_respects_burn_in():
    ts = np.geomspace(1.0, 1e4, 80)
    vals = 5.0 * ts**-0.75
    t_lo, _, _ = detect_window(ts, vals, burn_in=50.0)
    assert t_lo >= 50.0


def test_detect_window_rejects_wiggle():
    ts = np.geomspace(1.0, 1e4, 80)
    vals = ts**-0.75 * (1.0 + 0.8 * np.sin(3.0 * np.log(ts)))
    with pytest.raises(WindowNotFound):
        detect_window(ts, vals, slope_tol=0.01, burn_in=0.0)


def test_perturbation_amplitude_and_reality():
    cfg = small_config()
    roll = solve_roll(PARAMS, n_modes=16)
    stepper = Stepper(cfg)
    v = make_perturbation(stepper, roll, cfg.perturbation)
    assert np.isrealobj(v)
    assert np.abs(v).max() == pytest.approx(cfg.perturbation.amplitude, rel=1e-12)


def test_perturbation_seed_determinism():
    cfg = small_config()
    roll = solve_roll(PARAMS, n_modes=16)
    stepper = Stepper(cfg)
    a = make_perturbation(stepper, roll, PerturbationSpec(amplitude=1e-4, seed=5))
    b = make_perturbation(stepper, roll, PerturbationSpec(amplitude=1e-4, seed=5))
    c = make_perturbation(stepper, roll, PerturbationSpec(amplitude=1e-4, seed=6))
    np.testing.assert_array_equal(a, b)
    assert np.abs(a - c).max() > 0


@pytest.fixture(scope="module")
def diag_setup():
    cfg = small_config(m_x=8, n_x=128, l_y=50.0, n_y=64)
    roll = solve_roll(PARAMS, n_modes=16)
    interp = build_branch_interpolant(roll, sigma_max=0.3, n_half=8, J=48)
    stepper = Stepper(cfg)
    v_hat = stepper.to_spectral(make_perturbation(stepper, roll, cfg.perturbation))
    return stepper, interp, v_hat


def test_bloch_project_splits(diag_setup):
    stepper, interp, v_hat = diag_setup
    stable = bloch_project(stepper, interp, v_hat, keep="stable")
    critical = bloch_project(stepper, interp, v_hat, keep="critical")
    np.testing.assert_allclose(stable + critical, v_hat, atol=1e-12)


def test_bloch_project_idempotent(diag_setup):
    stepper, interp, v_hat = diag_setup
    stable = bloch_project(stepper, interp, v_hat, keep="stable")
    again = bloch_project(stepper, interp, stable, keep="stable")
    np.testing.assert_allclose(again, stable, atol=1e-12)
    crit = bloch_project(stepper, interp, v_hat, keep="critical")
    assert np.abs(bloch_project(stepper, interp, crit, keep="stable")).max() <= 1e-12


def test_hnorm_components_nonnegative(diag_setup):
    stepper, interp, v_hat = diag_setup
    comp = HNormDiagnostics(interp, cutoff=0.2).components(stepper, v_hat)
    assert set(comp) >= {"a_l1", "sigma1a_l1", "vs_l1"}
    assert all(comp[key] >= 0.0 for key in ("a_l1", "sigma1a_l1", "vs_l1"))
    assert comp["a_l1"] + comp["vs_l1"] > 0.0


def test_stable_part_decays_exponentially(diag_setup):
    """With the critical branch removed, the spectral gap forces fast decay of
    the linearized evolution."""
    stepper, interp, v_hat = diag_setup
    stable_hat = bloch_project(stepper, interp, v_hat, keep="stable")
    lin = Stepper(stepper.config, nonlinear=False)
    roll = solve_roll(PARAMS, n_modes=16)
    up_hat = lin.to_spectral(embed_roll(lin, roll))
    # Linearization around the roll: step u_p + v with the full nonlinear
    # stepper and subtract the (stationary) roll; amplitude small enough that
    # the quadratic terms are negligible.
    full = Stepper(stepper.config)
    state = SimState(t=0.0, u_hat=up_hat + stable_hat)
    n0 = np.abs(full.to_physical(state.u_hat) - full.to_physical(up_hat)).max()
    for _ in range(int(round(40.0 / stepper.config.dt))):
        state = full.step(state)
    n1 = np.abs(full.to_physical(state.u_hat) - full.to_physical(up_hat)).max()
    # Modes with |sigma_2| just above the projection cutoff decay at the slow
    # quartic rate, so only most of the amplitude is gone by t = 40.
    assert n1 <= 0.10 * n0
