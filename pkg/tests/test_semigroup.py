"""Semigroup decay laws: quadrature norms, slopes, monotonicity, scaling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zzlab.errors import WindowTooNarrow
from zzlab.semigroup import (
    PURE_MODEL_ORACLE,
    DecayLawSpec,
    decay_curve,
    fit_decay,
    kernel_norm,
    rate_table,
)


def test_pure_model_oracle():
    """d1 = d2 = 1, p = 4, k = 0, t = 1: the finite sigma1 interval gives a
    value strictly below the whole-line product sqrt(pi) * 2*Gamma(5/4)."""
    spec = DecayLawSpec(1.0, 1.0, transverse_power=4, k=0)
    val = kernel_norm(spec, 1.0, "integral")
    assert val < PURE_MODEL_ORACLE
    # the sigma2 factor matches the oracle exactly; sigma1 is erf-reduced
    expected = math.erf(0.5) * math.sqrt(math.pi) * 2.0 * math.gamma(1.25)
    assert val == pytest.approx(expected, rel=1e-9)


def test_sup_norm_k0_is_one():
    for p in (2, 4):
        spec = DecayLawSpec(2.0, 0.5, transverse_power=p, k=0)
        for t in (0.1, 1.0, 100.0):
            assert kernel_norm(spec, t, "sup") == 1.0


def test_sup_norm_k1_slope():
    spec = DecayLawSpec(1.0, 1.0, transverse_power=4, k=1)
    curve = decay_curve(spec, "sup")
    assert curve.fitted_slope == pytest.approx(-0.5, abs=0.02)


def test_rate_table_all_slopes():
    for row in rate_table():
        assert abs(row["slope"] - row["expected"]) <= 0.06, row


@settings(deadline=None, max_examples=15)
@given(
    d1=st.floats(min_value=0.3, max_value=3.0),
    d2=st.floats(min_value=0.3, max_value=3.0),
    p=st.sampled_from([2, 4]),
    k=st.sampled_from([0, 1]),
)
def test_monotone_in_t(d1, d2, p, k):
    spec = DecayLawSpec(d1, d2, transverse_power=p, k=k)
    ts = [0.5, 2.0, 10.0, 80.0, 500.0]
    vals = [kernel_norm(spec, t, "integral") for t in ts]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_d1_scaling():
    """Scaling d1 -> s*d1 rescales the integral norm by s^{-1/2} up to the
    finite-interval truncation error."""
    # Late enough that the Gaussian sigma1 tail is negligible at the edge of
    # the integration interval even for the smallest rescaled d1.
    base = kernel_norm(DecayLawSpec(1.0, 1.0, 4, 0), 300.0, "integral")
    for s in (0.5, 0.8, 1.3, 2.0):
        scaled = kernel_norm(DecayLawSpec(s, 1.0, 4, 0), 300.0, "integral")
        assert abs(scaled - base / math.sqrt(s)) <= 1e-8 * base


def test_fit_decay_exact_power_law():
    ts = np.geomspace(1.0, 1e3, 30)
    curve = fit_decay(ts, ts**-0.75)
    assert curve.fitted_slope == pytest.approx(-0.75, abs=1e-12)


def test_fit_decay_window_guards():
    ts = np.geomspace(10.0, 20.0, 30)  # less than a decade
    with pytest.raises(WindowTooNarrow):
        fit_decay(ts, ts**-1.0)
    ts = np.geomspace(1.0, 100.0, 6)  # too few samples
    with pytest.raises(WindowTooNarrow):
        fit_decay(ts, ts**-1.0)
