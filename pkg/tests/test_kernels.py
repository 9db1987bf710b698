"""Mode split and k1 kernel: projections, degeneracy, bound, symmetry."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zzlab.bloch import SigmaPoint
from zzlab.errors import OutOfBranchRange
from zzlab.kernels import (
    KernelSample,
    bound_rhs,
    build_branch_interpolant,
    k1_kernel,
    sample_k1,
    split_modes,
    verify_k1_bound,
)


@pytest.fixture(scope="module")
def interp(roll_02):
    return build_branch_interpolant(roll_02, sigma_max=0.25, n_half=10, J=64)


def _unit(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def test_split_eigvec_itself():
    rng = np.random.default_rng(0)
    e = _unit(31, rng)
    ms = split_modes(e, e, 1.0)
    assert ms.a == pytest.approx(1.0)
    assert np.linalg.norm(ms.v_s) < 1e-12


def test_split_orthogonal_vector():
    rng = np.random.default_rng(1)
    e = _unit(31, rng)
    v = _unit(31, rng)
    v = v - np.vdot(e, v) * e
    ms = split_modes(v, e, 1.0)
    assert abs(ms.a) < 1e-12
    np.testing.assert_allclose(ms.v_s, v, atol=1e-14)


def test_split_cutoff_zero():
    rng = np.random.default_rng(2)
    e, v = _unit(31, rng), _unit(31, rng)
    ms = split_modes(v, e, 0.0)
    assert ms.a == 0.0
    np.testing.assert_allclose(ms.v_s, v, atol=0)


@settings(deadline=None, max_examples=100)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_split_reconstruction(seed):
    rng = np.random.default_rng(seed)
    e, v = _unit(17, rng), rng.standard_normal(17) + 1j * rng.standard_normal(17)
    cutoff = rng.uniform(0.0, 1.0)
    ms = split_modes(v, e, cutoff)
    np.testing.assert_allclose(ms.a * e + ms.v_s, v, atol=1e-12)


def test_k1_vanishes_at_origin(roll_02, interp):
    val = k1_kernel(roll_02, interp, SigmaPoint(0.0, 0.0), SigmaPoint(0.0, 0.0))
    assert abs(val) <= 1e-8


def test_k1_vanishing_slice(roll_02, interp):
    worst = 0.0
    for s2 in np.linspace(-0.08, 0.08, 7):
        for s2t in np.linspace(-0.08, 0.08, 5):
            val = k1_kernel(
                roll_02, interp, SigmaPoint(0.0, s2), SigmaPoint(0.0, s2t)
            )
            worst = max(worst, abs(val))
    assert worst <= 1e-8


def test_k1_convolution_pair_symmetry(roll_02, interp):
    a, b = SigmaPoint(0.03, 0.02), SigmaPoint(0.01, -0.04)
    d = SigmaPoint(a.sigma1 - b.sigma1, a.sigma2 - b.sigma2)
    assert k1_kernel(roll_02, interp, a, b) == pytest.approx(
        k1_kernel(roll_02, interp, a, d), abs=1e-12
    )


def test_k1_linear_shrinkage(roll_02, interp):
    scales = np.array([0.08 * 2.0 ** (-k) for k in range(5)])
    vals = np.array(
        [
            abs(k1_kernel(roll_02, interp, SigmaPoint(s, 0.0), SigmaPoint(s / 2, 0.0)))
            for s in scales
        ]
    )
    slope = np.polyfit(np.log(scales), np.log(vals), 1)[0]
    assert slope >= 0.9


def test_out_of_range(roll_02, interp):
    with pytest.raises(OutOfBranchRange):
        k1_kernel(roll_02, interp, SigmaPoint(0.3, 0.0), SigmaPoint(0.0, 0.0))


def test_bound_rhs_form():
    s, st_ = SigmaPoint(0.1, 0.5), SigmaPoint(-0.2, 0.3)
    assert bound_rhs(s, st_) == pytest.approx(0.1 + 0.2 + 0.3 + 0.1 * 0.2 * 0.3)


def test_verify_bound_zero_sample():
    sample = KernelSample(
        sigma=SigmaPoint(0.1, 0.0),
        sigma_tilde=SigmaPoint(0.05, 0.0),
        k1_value=0.0,
        bound_rhs=0.25,
    )
    c, violations = verify_k1_bound([sample])
    assert c == 0.0 and violations == 0


def test_two_grid_cross_validation(roll_02, interp):
    rng = np.random.default_rng(7)
    pairs = [
        (SigmaPoint(*rng.uniform(-0.07, 0.07, 2)), SigmaPoint(*rng.uniform(-0.07, 0.07, 2)))
        for _ in range(40)
    ]
    c_a, v_a = verify_k1_bound(sample_k1(roll_02, interp, pairs))
    assert v_a == 0
    fine = build_branch_interpolant(roll_02, sigma_max=0.25, n_half=14, J=64)
    c_b, v_b = verify_k1_bound(
        sample_k1(roll_02, fine, pairs), frozen_c=c_a, slack=0.10
    )
    assert v_b == 0
    assert c_b == pytest.approx(c_a, rel=0.10)
