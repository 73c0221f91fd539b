import cmath
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from genjulia.exceptions import PreconditionError, RegularityError
from genjulia.k1_gamma import GammaSequence
from genjulia.sequence import (
    CompositionTower,
    RegularSequenceSpec,
    capacity,
    escape_radius,
    green,
    green_functional_check,
    green_grid,
    tower_eval,
    validate_regularity,
)


def _holds(A1, A2, R):
    return R > 1 + A2 and A1 * R * (1 - A2 / (R - 1)) > 2


# -- validate_regularity --------------------------------------------------------

def test_validate_square():
    spec = RegularSequenceSpec.autonomous(["0", "0", "1"], A1=1, A2=1, A3=1)
    assert validate_regularity(spec, 20).passed


def test_validate_k1_gamma_point_two():
    spec = GammaSequence.constant("0.2").to_spec(A1=2.5, A2=1, A3=1)
    rep = validate_regularity(spec, 10)
    assert rep.passed
    assert rep.min_leading == pytest.approx(2.5)


def test_validate_reports_violation():
    spec = RegularSequenceSpec.explicit([["0", "10", "1/2"]], A1=1, A2=100, A3=1)
    rep = validate_regularity(spec, 3)
    assert not rep.passed
    assert rep.violations[0]["message"] == "|a_{1,2}|=0.5 < A1"
    assert rep.violations[0]["n"] == 1 and rep.violations[0]["inequality"] == "A1"
    with pytest.raises(RegularityError) as info:
        validate_regularity(spec, 3, raise_on_failure=True)
    assert info.value.violations


def test_validate_horizon_precondition():
    spec = RegularSequenceSpec.autonomous(["0", "0", "1"])
    with pytest.raises(PreconditionError):
        validate_regularity(spec, 0)


def test_degree_one_rejected():
    spec = RegularSequenceSpec.explicit([["1", "2"], ["0", "0", "1"]])
    with pytest.raises(PreconditionError):
        spec.poly(1)


# -- escape radius --------------------------------------------------------------

def test_escape_radius_examples():
    R = escape_radius(1, 1)
    assert R > 2 + math.sqrt(2) and R == pytest.approx(2 + math.sqrt(2), rel=1e-15)
    assert _holds(1, 1, R)
    R = escape_radius(2, 1)
    assert R == pytest.approx((3 + math.sqrt(5)) / 2, rel=1e-15) and _holds(2, 1, R)
    R = escape_radius(1e6, 1)
    assert 2 < R < 2 + 1e-5


@pytest.mark.parametrize("A1,A2", [(0.3, 0.01), (1, 1e-12), (7, 3), (1e-3, 50)])
def test_escape_radius_strict_and_tight(A1, A2):
    R = escape_radius(A1, A2)
    assert _holds(A1, A2, R)
    assert not _holds(A1, A2, R * (1 - 1e-12))


# -- tower_eval -----------------------------------------------------------------

def test_tower_eval_square(square_tower):
    tv = tower_eval(square_tower, 2, 5)
    assert tv.log_abs == pytest.approx(32 * math.log(2), rel=1e-15)
    assert tv.escaped_at == 1


def test_tower_eval_chebyshev_bounded(quarter_tower):
    tv = tower_eval(quarter_tower, 0.3, 10)
    assert tv.escaped_at is None
    assert abs(tv.value) <= 1 + 1e-9
    assert tv.value.real == pytest.approx(math.cos(1024 * math.acos(0.3)), abs=1e-9)


def test_tower_eval_hand_iteration():
    tower = CompositionTower(RegularSequenceSpec.autonomous(["1", "0", "1"]))
    assert tower_eval(tower, 0, 3).value == 5


def test_tower_eval_rejects_nan(square_tower):
    with pytest.raises(PreconditionError):
        tower_eval(square_tower, complex(math.nan, 0), 2)


def test_tower_leading_coefficient(quarter_tower):
    F3 = quarter_tower.F(3)
    assert F3.leading == 2 ** 7
    assert quarter_tower.log_abs_leading_F(3) == pytest.approx(7 * math.log(2))
    assert quarter_tower.degree(3) == 8


# -- capacity -------------------------------------------------------------------

def test_capacity_examples(square_tower, quarter_tower):
    assert capacity(square_tower).value == 1.0
    assert capacity(quarter_tower).value == pytest.approx(0.5, abs=1e-12)
    assert capacity(GammaSequence.constant("1/8").tower()).value == pytest.approx(0.25, abs=1e-12)


def test_capacity_monotone_in_gamma():
    caps = [capacity(GammaSequence.constant(g).tower()).value for g in (0.05, 0.1, 0.15, 0.2, 0.25)]
    assert caps == sorted(caps)


def test_capacity_tail_bound_reported(quarter_tower):
    res = capacity(quarter_tower, tol=1e-6)
    assert res.tail_bound < 1e-6
    assert abs(res.value - 0.5) < 1e-5


# -- green ----------------------------------------------------------------------

def test_green_examples(square_tower, quarter_tower):
    g = green(square_tower, 2)
    assert g.value == pytest.approx(math.log(2), abs=1e-15) and g.escaped
    g = green(quarter_tower, 0.5)
    assert g.value == 0 and not g.escaped


def test_green_interval_closed_form(quarter_tower):
    for z in (1.5, 2 + 1j, -3j, 0.2 + 0.01j):
        w = complex(z)
        exact = math.log(abs(w + cmath.sqrt(w - 1) * cmath.sqrt(w + 1)))
        assert green(quarter_tower, z, 80).value == pytest.approx(exact, abs=1e-12)


def test_green_escape_above_radius():
    rng = random.Random(3)
    for _ in range(5):
        spec = RegularSequenceSpec.quadratic_c([complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                                                for _ in range(4)], tail="repeat-cycle")
        tower = CompositionTower(spec)
        R = tower.escape_radius
        for th in np.linspace(0, 2 * np.pi, 7):
            z = 1.01 * R * cmath.exp(1j * th)
            assert tower_eval(tower, z, 1).escaped_at == 1
            assert green(tower, z).value > 0


def test_green_nonnegative_and_zero_on_interval(quarter_tower):
    for th in np.linspace(0, np.pi, 25):
        assert green(quarter_tower, math.cos(th)).value == 0.0


def test_green_error_estimate_dominates_refinement():
    spec = RegularSequenceSpec.quadratic_c(["1/4", "-1/2"], tail="repeat-cycle")
    tower = CompositionTower(spec)
    z = 2.5 + 1j
    for k in (6, 8, 10):
        a, b = green(tower, z, k), green(tower, z, k + 1)
        assert abs(a.value - b.value) <= a.error_estimate + 1e-15


def test_green_functional_examples(square_tower, quarter_tower):
    assert green_functional_check(square_tower, 2, 3) < 1e-15
    assert green_functional_check(quarter_tower, 2, 2) < 1e-8
    rng = random.Random(5)
    spec = RegularSequenceSpec.quadratic_c([Fraction(rng.randint(-4, 4), 4) for _ in range(5)],
                                           tail="repeat-cycle")
    tower = CompositionTower(spec)
    z = 2 * tower.escape_radius * cmath.exp(0.7j)
    assert green_functional_check(tower, z, 3) < 1e-6


def test_green_functional_needs_escape(quarter_tower):
    with pytest.raises(PreconditionError):
        green_functional_check(quarter_tower, 0.1, 2)


def test_autonomous_matches_explicit_repeat_last():
    a = CompositionTower(RegularSequenceSpec.autonomous(["-1/2", "1/3", "2"]))
    e = CompositionTower(RegularSequenceSpec.explicit([["-1/2", "1/3", "2"]], "repeat-last"))
    for z in (1.3, 0.2 + 0.9j, -2):
        assert green(a, z).value == green(e, z).value
    assert capacity(a).value == capacity(e).value


def test_green_grid_shape(square_tower):
    grid = green_grid(square_tower, [-2, 0, 2], [0, 1])
    assert len(grid) == 2 and len(grid[0]) == 3
    assert grid[0][2].value == pytest.approx(math.log(2))


def test_shifted_spec_generators(quarter):
    spec = RegularSequenceSpec.quadratic_c(["1", "2", "3"], tail="repeat-cycle")
    s = spec.shifted(2)
    assert s.poly(1).coeffs[0] == 3
    assert s.poly(2).coeffs[0] == 1
