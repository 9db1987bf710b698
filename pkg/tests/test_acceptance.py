"""Acceptance gate: one pass/fail line per criterion.

Each test prints exactly one `CRITERION n: PASS|FAIL` line (unbuffered past
pytest's capture) and then asserts, so the printed verdicts and the pytest
verdicts agree.  Tolerances are pinned; they are part of the contract, not
tuning knobs.
"""

import numpy as np
import pytest

from zzlab.bloch import (
    SigmaPoint,
    _translation_mode,
    critical_branch,
    make_axis_grid,
    parity_check,
)
from zzlab.expand import c2_closed, fit_c2_spectral, kappa_z_root
from zzlab.kernels import (
    build_branch_interpolant,
    k1_kernel,
    sample_k1,
    verify_k1_bound,
)
from zzlab.roll import Params, solve_roll
from zzlab.semigroup import rate_table
from zzlab.sim import PerturbationSpec, SimConfig, run_decay_experiment

J = 64


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} -- {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_roll_series(capsys):
    """Newton roll coefficients match the small-amplitude series to O(a~^4)."""
    worst = 0.0
    for eps in (0.05, 0.1, 0.2):
        roll = solve_roll(Params(eps, 0.0), n_modes=32)
        at = roll.a_tilde
        err1 = abs(roll.a1 - (at + at**3 / 512.0))
        err3 = abs(roll.a3 + at**3 / 256.0)
        worst = max(worst, err1 / (5.0 * at**4), err3 / (5.0 * at**4))
    report(
        capsys,
        1,
        worst <= 1.0,
        f"max series error = {worst:.3f} of the 5*a~^4 budget",
    )


def test_criterion_2_zero_mode(capsys):
    """Translational zero mode: lambda(0) = 0, eigenvector = u_p'."""
    worst_lam, worst_overlap = 0.0, 1.0
    for eps in (0.1, 0.2):
        roll = solve_roll(Params(eps, 0.0), n_modes=32)
        branch = critical_branch(roll, [SigmaPoint(0.0, 0.0)], J)
        lam = abs(float(branch.lambdas[0]))
        tmode = _translation_mode(roll, J)
        tmode = tmode / np.linalg.norm(tmode)
        vec = branch.eigvecs[0] / np.linalg.norm(branch.eigvecs[0])
        overlap = abs(np.vdot(tmode, vec))
        worst_lam = max(worst_lam, lam)
        worst_overlap = min(worst_overlap, overlap)
    ok = worst_lam <= 1e-8 and worst_overlap >= 1.0 - 1e-8
    report(
        capsys,
        2,
        ok,
        f"|lambda(0)| <= {worst_lam:.2e} (tol 1e-8), "
        f"overlap >= {worst_overlap:.12f} (tol 1 - 1e-8)",
    )


def test_criterion_3_c2_cross_validation(capsys):
    """Fitted transverse quadratic coefficient vs the closed form, rel 1e-2.

    The third point sits on the zigzag boundary where both coefficients are
    O(eps^8); there the closed form's own O(a~^6) truncation error exceeds the
    target value and the criterion is not attainable by any consistent solver.
    The comparison is still run verbatim and reported honestly.
    """
    points = [(0.1, 0.0), (0.2, 0.0), (0.2, -(0.2**4) / 512.0)]
    details, ok = [], True
    for eps, kappa in points:
        fit = fit_c2_spectral(eps, kappa, J=J)
        roll = solve_roll(Params(eps, kappa), n_modes=32)
        closed = c2_closed(eps, kappa, roll.a1)
        # Fitted lambda ~ -c2*sigma2^2 while the closed form is the
        # coefficient of +sigma2^2 in lambda; equality means fit = -closed.
        rel = abs(fit.c2 - (-closed)) / abs(closed)
        ok = ok and rel <= 1e-2
        details.append(f"({eps},{kappa:+.2e}): rel = {rel:.2e}")
    report(capsys, 3, ok, "; ".join(details) + " (tol 1e-2)")


def test_criterion_4_zigzag_curve(capsys):
    """kappa_z(eps) = -eps^4/512 + O(eps^6) with deviation slope 6 +- 0.7."""
    eps_list = np.array([0.05, 0.1, 0.2])
    devs = []
    for eps in eps_list:
        res = kappa_z_root(eps, spectral=False)
        devs.append(abs(res.kappa_z_numeric - res.kappa_z_series))
    devs = np.array(devs)
    slope = np.polyfit(np.log(eps_list), np.log(devs), 1)[0]
    big_k = float((devs / eps_list**6).max())
    ok = abs(slope - 6.0) <= 0.7
    report(
        capsys,
        4,
        ok,
        f"deviation slope = {slope:.3f} (6 +- 0.7), K = max dev/eps^6 = {big_k:.3e}",
    )


def test_criterion_5_parity(capsys):
    """Gauge-fixed eigenvector has Re e odd, Im e even on the sigma1 axis."""
    roll = solve_roll(Params(0.2, 0.0), n_modes=32)
    grid = [SigmaPoint(s1, 0.0) for s1 in np.linspace(-0.1, 0.1, 21)]
    branch = critical_branch(roll, grid, J)
    rep = parity_check(branch, roll)
    total = float(rep.even_part_residual.max() + rep.odd_part_residual.max())
    report(capsys, 5, total <= 1e-6, f"parity residual = {total:.2e} (tol 1e-6)")


def test_criterion_6_semigroup_rates(capsys):
    """Quadrature norm slopes over t in [10, 1e3]: -k/2, -3/4-k/2, -1-k/2."""
    rows = rate_table()
    worst = max(abs(r["slope"] - r["expected"]) for r in rows)
    report(
        capsys,
        6,
        worst <= 0.06,
        f"max |slope - expected| = {worst:.4f} over {len(rows)} rows (tol 0.06)",
    )


def test_criterion_7_k1_degeneracy(capsys):
    """k1 vanishes on sigma1 = sigma1~ = 0; frozen bound certifies a new grid."""
    roll = solve_roll(Params(0.2, 0.0), n_modes=32)
    interp_a = build_branch_interpolant(roll, sigma_max=0.25, n_half=10, J=J)
    slice_sup = 0.0
    for s2 in np.linspace(-0.08, 0.08, 9):
        for s2t in np.linspace(-0.08, 0.08, 5):
            val = k1_kernel(roll, interp_a, SigmaPoint(0.0, s2), SigmaPoint(0.0, s2t))
            slice_sup = max(slice_sup, abs(val))
    rng = np.random.default_rng(11)
    pairs = [
        (SigmaPoint(*rng.uniform(-0.07, 0.07, 2)), SigmaPoint(*rng.uniform(-0.07, 0.07, 2)))
        for _ in range(60)
    ]
    c_fit, _ = verify_k1_bound(sample_k1(roll, interp_a, pairs))
    interp_b = build_branch_interpolant(roll, sigma_max=0.25, n_half=14, J=J)
    _, violations = verify_k1_bound(
        sample_k1(roll, interp_b, pairs), frozen_c=c_fit, slack=0.10
    )
    ok = slice_sup <= 1e-8 and violations == 0
    report(
        capsys,
        7,
        ok,
        f"slice sup = {slice_sup:.2e} (tol 1e-8), C = {c_fit:.3f}, "
        f"grid-B violations at 10% slack = {violations}",
    )


@pytest.mark.slow
def test_criterion_8_nonlinear_decay(capsys):
    """Intermediate-asymptotics decay exponents at and off the zigzag boundary."""
    eps = 0.3
    kz = kappa_z_root(eps, spectral=False).kappa_z_numeric
    cases = {"at_zigzag": kz, "offset": kz + 0.05 * eps}
    bands = {"at_zigzag": (0.60, 0.90), "offset": (0.80, 1.20)}
    exponents = {name: {} for name in cases}
    for name, kappa in cases.items():
        params = Params(eps, kappa)
        roll = solve_roll(params, n_modes=32)
        for seed in (1, 2, 3):
            cfg = SimConfig(
                params=params,
                m_x=128,
                l_y=400.0,
                n_x=2048,
                n_y=128,
                dt=0.5,
                t_end=3000.0,
                perturbation=PerturbationSpec(amplitude=1e-3 * roll.a1, seed=seed),
            )
            exponents[name][seed] = run_decay_experiment(cfg).fitted_exponent
    ok = True
    details = []
    for name in cases:
        lo, hi = bands[name]
        vals = exponents[name]
        in_band = all(lo <= v <= hi for v in vals.values())
        ok = ok and in_band
        details.append(
            f"{name}: " + ",".join(f"{v:.3f}" for v in vals.values()) + f" in [{lo},{hi}]"
        )
    ordered = all(
        exponents["offset"][s] > exponents["at_zigzag"][s] for s in (1, 2, 3)
    )
    ok = ok and ordered
    details.append(f"per-seed offset > at_zigzag: {ordered}")
    report(capsys, 8, ok, "; ".join(details))


def test_criterion_9_spectral_gap(capsys):
    """Second eigenvalue of L_D(sigma) stays below a negative lambda0."""
    details, ok = [], True
    for eps, kappa in ((0.1, 0.0), (0.2, 0.0), (0.2, -(0.2**4) / 512.0)):
        roll = solve_roll(Params(eps, kappa), n_modes=32)
        pts = [SigmaPoint(0.0, 0.0)]
        for s1 in np.linspace(-0.25, 0.25, 21):
            for s2 in np.linspace(-0.25, 0.25, 21):
                if 0 < np.hypot(s1, s2) <= 0.25:
                    pts.append(SigmaPoint(s1, s2))
        # At eps = 0.1 the gap (~2*eps^2) is only an order of magnitude above
        # the first continuation step, so the crossing guard needs the looser
        # factor; selection is still unambiguous.
        branch = critical_branch(roll, pts, J, gap_factor=5.0)
        ok = ok and branch.lambda0 < 0.0
        details.append(f"({eps},{kappa:+.2e}): lambda0 = {branch.lambda0:.4f}")
    report(capsys, 9, ok, "; ".join(details))
