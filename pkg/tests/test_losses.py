import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asrl import losses
from asrl.errors import DomainError
from asrl.losses import ASRLConfig, ASRLState, Absolute, Asrl, Huber, Squared, asrl_refresh

STATE = ASRLState(delta1=1.0, delta2=3.0, alpha=2.0, beta=1.0, gamma=1.0)
ASRL = Asrl.from_state(STATE)


def fd(f, y, F, h=1e-6):
    return (f(y, F + h) - f(y, F - h)) / (2 * h)


class TestValue:
    def test_zero_residual(self):
        assert ASRL.value(3.3, 3.3) == 0.0

    @pytest.mark.parametrize("r, expected", [(0.5, 0.25), (2.0, 2.0), (-2.0, 2.0), (10.0, math.log(11))])
    def test_asrl_branches(self, r, expected):
        assert ASRL.value(r, 0.0) == pytest.approx(expected, rel=1e-15)

    def test_asrl_log_branch_reference_value(self):
        assert ASRL.value(10.0, 0.0) == pytest.approx(2.3978952727983707, rel=1e-15)

    def test_huber(self):
        assert Huber(1.0).value(2.0, 0.0) == 1.5
        assert Huber(1.0).value(0.5, 0.0) == 0.125

    def test_baselines(self):
        assert Squared().value(3.0, 1.0) == 2.0
        assert Absolute().value(-3.0, 1.0) == 4.0

    def test_vectorized(self):
        out = ASRL.value(np.array([0.5, 2.0, 10.0]), np.zeros(3))
        assert out == pytest.approx([0.25, 2.0, math.log(11)])

    def test_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            ASRL.value(float("nan"), 0.0)
        with pytest.raises(DomainError):
            Squared().gradient(0.0, float("inf"))

    def test_unfitted_asrl_raises(self):
        with pytest.raises(DomainError):
            Asrl().value(1.0, 0.0)

    def test_functional_api(self):
        assert losses.value(ASRL, 2.0, 0.0) == ASRL.value(2.0, 0.0)


class TestGradient:
    @pytest.mark.parametrize("loss", [Squared(), Huber(1.0), ASRL])
    def test_zero_at_fit(self, loss):
        assert loss.gradient(1.0, 1.0) == 0.0

    @pytest.mark.parametrize("r, expected", [(0.5, -1.0), (-2.0, 1.0), (9.0, -0.1)])
    def test_asrl_regions(self, r, expected):
        assert ASRL.gradient(r, 0.0) == pytest.approx(expected, rel=1e-15)

    def test_baselines(self):
        assert Squared().gradient(3.0, 1.0) == -2.0
        assert Absolute().gradient(3.0, 1.0) == -1.0
        assert Absolute().gradient(1.0, 1.0) == 0.0
        assert Huber(1.0).gradient(3.0, 1.0) == -1.0
        assert Huber(1.0).gradient(1.5, 1.0) == -0.5


class TestHessian:
    def test_squared(self):
        assert Squared().hessian(4.0, -7.0, 1e-6) == 1.0

    @pytest.mark.parametrize("r, expected", [(0.5, 2.0), (2.0, 1e-6), (9.0, 0.01)])
    def test_asrl_regions(self, r, expected):
        assert ASRL.hessian(r, 0.0, 1e-6) == pytest.approx(expected, rel=1e-12)

    def test_log_region_curvature_is_negative(self):
        # the log branch is concave; hessian reports its magnitude
        assert ASRL.curvature(9.0, 0.0) == pytest.approx(-0.01)
        assert fd(ASRL.gradient, 9.0, 0.0) == pytest.approx(-0.01, rel=1e-6)

    def test_floors(self):
        assert Absolute().hessian(5.0, 0.0, 1e-3) == 1e-3
        assert Huber(1.0).hessian(5.0, 0.0, 1e-3) == 1e-3
        assert Huber(1.0).hessian(0.5, 0.0, 1e-3) == 1.0

    def test_rejects_bad_floor(self):
        with pytest.raises(DomainError):
            ASRL.hessian(1.0, 0.0, 0.0)


class TestMajorizer:
    @pytest.mark.parametrize("loss", [Squared(), Absolute(), Huber(1.0), ASRL])
    def test_gradient_equals_minus_weight_times_residual(self, loss):
        r = np.array([-20.0, -2.5, -0.7, 0.3, 1.0, 2.0, 3.0, 8.0])
        w = loss.majorizer(r, np.zeros_like(r), 1e-12)
        assert loss.gradient(r, np.zeros_like(r)) == pytest.approx(-w * r, rel=1e-12)

    def test_asrl_values(self):
        assert ASRL.majorizer(0.5, 0.0) == 2.0
        assert ASRL.majorizer(2.0, 0.0) == 0.5
        assert ASRL.majorizer(9.0, 0.0) == pytest.approx(1 / 90)

    def test_absolute_at_zero_is_finite(self):
        assert math.isfinite(Absolute().majorizer(0.0, 0.0))


class TestRefresh:
    def test_zero_residuals(self):
        st_ = asrl_refresh(ASRLConfig(0.5, 0.9, 1e-6), [0.0] * 4)
        assert (st_.delta1, st_.delta2) == (0.0, 0.0)
        assert (st_.alpha, st_.beta, st_.gamma) == pytest.approx((1e6, 1e6, 1e6))
        assert Asrl.from_state(st_).region(0.0, 0.0) == 0

    def test_thresholds_example(self):
        st_ = asrl_refresh(ASRLConfig(0.25, 0.75, 1e-6), [1, -2, 3, -4])
        assert (st_.delta1, st_.delta2) == pytest.approx((1.75, 3.25))

    def test_constant_residuals(self):
        st_ = asrl_refresh(ASRLConfig(), [-2.5] * 7)
        assert st_.delta1 == st_.delta2 == 2.5
        assert st_.alpha == pytest.approx(1e6)

    def test_pure(self):
        cfg = ASRLConfig(0.3, 0.7)
        a = asrl_refresh(cfg, [1.0, -3.0, 2.0])
        b = asrl_refresh(cfg, [1.0, -3.0, 2.0])
        assert a == b and cfg == ASRLConfig(0.3, 0.7)

    def test_loss_refreshed_returns_new_object(self):
        base = Asrl()
        fitted = base.refreshed([1.0, 2.0, -3.0])
        assert base.state is None and fitted.state is not None


class TestConfigValidation:
    def test_asrl_config(self):
        with pytest.raises(DomainError):
            ASRLConfig(0.9, 0.5)
        with pytest.raises(DomainError):
            ASRLConfig(eps=0.0)

    def test_state(self):
        with pytest.raises(DomainError):
            ASRLState(3.0, 1.0, 1.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            ASRLState(1.0, 3.0, 0.0, 1.0, 1.0)

    def test_huber_delta(self):
        with pytest.raises(DomainError):
            Huber(0.0)

    def test_descriptor_round_trip(self):
        for loss in (Squared(), Absolute(), Huber(0.7), Asrl(ASRLConfig(0.4, 0.8, 1e-5))):
            back = losses.loss_from_descriptor(loss.descriptor())
            assert back.descriptor() == loss.descriptor()


# --- properties ------------------------------------------------------------

states = st.builds(
    lambda d1, gap, a, b, g: ASRLState(d1, d1 + gap, a, b, g),
    st.floats(0.0, 5.0),
    st.floats(0.0, 5.0),
    st.floats(0.01, 10.0),
    st.floats(0.01, 10.0),
    st.floats(0.01, 10.0),
)
resid = st.floats(-50.0, 50.0)


@given(states, resid)
def test_exactly_one_region(state, r):
    a = abs(r)
    fired = [a <= state.delta1, state.delta1 < a <= state.delta2, a > state.delta2]
    assert sum(fired) == 1
    assert Asrl.from_state(state).region(r, 0.0) == fired.index(True)


@given(states, resid)
def test_sign_opposition(state, r):
    for loss in (Squared(), Absolute(), Huber(1.0), Asrl.from_state(state)):
        g = loss.gradient(r, 0.0)
        if r != 0:
            assert np.sign(g) == -np.sign(r)


@given(states, resid)
def test_even_value_odd_gradient(state, r):
    for loss in (Squared(), Absolute(), Huber(1.3), Asrl.from_state(state)):
        assert loss.value(r, 0.0) == loss.value(0.0, r) == loss.value(-r, 0.0)
        assert loss.gradient(-r, 0.0) == -loss.gradient(r, 0.0)


@given(states, st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_value_monotone_within_region(state, a1, a2):
    loss = Asrl.from_state(state)
    lo, hi = sorted((a1, a2))
    if loss.region(lo, 0.0) == loss.region(hi, 0.0):
        assert loss.value(lo, 0.0) <= loss.value(hi, 0.0)


@given(states, st.floats(0.0, 50.0), st.floats(1e-3, 50.0))
def test_large_region_gradient_decays(state, a, bump):
    loss = Asrl.from_state(state)
    a = max(a, state.delta2 + 1e-3)
    assert abs(loss.gradient(a + bump, 0.0)) < abs(loss.gradient(a, 0.0))
