import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elasticdue.discretization import make_grid
from elasticdue.effective_delay import SchedulePenaltySpec, effective_delay_field, schedule_penalty
from elasticdue.errors import InvalidArgumentError, InvariantViolationError


@pytest.mark.parametrize("s, expected", [(0.0, 0.0), (-3.0, 3.0), (2.0, 4.0)])
def test_penalty_examples(s, expected):
    assert schedule_penalty(SchedulePenaltySpec(5.0, 1.0, 2.0), s) == expected


def test_penalty_off_returns_delay():
    grid = make_grid(0, 10, 10)
    d = np.linspace(1, 3, 20).reshape(2, 10)
    np.testing.assert_array_equal(effective_delay_field(d, SchedulePenaltySpec(5.0, 0.0, 0.0), grid), d)


def test_on_time_and_late_bins():
    grid = make_grid(0, 10, 10)
    psi = effective_delay_field(np.ones((1, 10)), SchedulePenaltySpec(5.0, 1.0, 1.0), grid)
    assert psi[0, 4] == 1.0
    assert psi[0, 6] == 3.0


def test_per_od_override():
    grid = make_grid(0, 10, 10)
    spec = SchedulePenaltySpec(5.0, 1.0, 1.0, {1: 8.0})
    psi = effective_delay_field(np.ones((2, 10)), spec, grid, path_od=np.array([0, 1]))
    assert psi[0].argmin() == 4
    assert psi[1].argmin() == 7


def test_rejects_nonpositive_delay():
    with pytest.raises(InvariantViolationError):
        effective_delay_field(np.array([[1.0, 0.0]]), SchedulePenaltySpec(1.0), make_grid(0, 2, 2))


def test_desired_arrival_must_precede_tf():
    with pytest.raises(InvalidArgumentError, match="T_A"):
        SchedulePenaltySpec(10.0).check_grid(make_grid(0, 10, 4))


def test_negative_coefficients_rejected():
    with pytest.raises(InvalidArgumentError):
        SchedulePenaltySpec(1.0, -0.1, 1.0)


coef = st.floats(0, 10)


@given(coef, coef, st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 1))
def test_penalty_convex_and_zero_at_zero(ge, gl, s1, s2, lam):
    spec = SchedulePenaltySpec(0.0, ge, gl)
    assert schedule_penalty(spec, 0.0) == 0.0
    mid = schedule_penalty(spec, lam * s1 + (1 - lam) * s2)
    assert mid <= lam * schedule_penalty(spec, s1) + (1 - lam) * schedule_penalty(spec, s2) + 1e-9


@given(coef, coef, st.integers(0, 2**32 - 1))
def test_field_dominates_delay(ge, gl, seed):
    grid = make_grid(0, 8, 16)
    d = np.random.default_rng(seed).uniform(0.1, 5, (3, 16))
    psi = effective_delay_field(d, SchedulePenaltySpec(4.0, ge, gl), grid)
    assert np.all(psi >= d)
    assert np.all(psi > 0)
