import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smashline.qcalculus import Deformation, q_multinomial
from smashline.random_walk import (
    OracleGuardExceeded,
    StepDensity,
    WalkSpec,
    expectation,
    moment,
    moment_oracle,
    moment_table,
    phi_x,
    phi_xi,
    walk_from_continuum,
)
from smashline.smash_algebra import SmashElement, multinomial

STEP = StepDensity(a=1.0, p1=0.3, theta=0.7, p2=0.6)


def enumerate_x_moment(k, n, s):
    """E[(sum of n independent +-a steps)^k] by listing all 2^n outcomes."""
    total = 0.0
    for signs in itertools.product((1, -1), repeat=n):
        prob = math.prod(s.p1 if e == 1 else 1 - s.p1 for e in signs)
        total += prob * (s.a * sum(signs)) ** k
    return total


def test_step_density_validation():
    with pytest.raises(ValueError):
        StepDensity(a=0.0)
    with pytest.raises(ValueError):
        StepDensity(p2=1.5)
    with pytest.raises(ValueError):
        WalkSpec(STEP, 0, Deformation(2))
    with pytest.raises(ValueError):
        WalkSpec(STEP, 2, Deformation(2), Q=1j)


def test_phi_examples():
    d3 = Deformation(3)
    assert phi_x(0, STEP) == 1
    assert phi_x(1, StepDensity(p1=0.5)) == 0
    assert phi_x(2, StepDensity(a=1.0, p1=0.13)) == pytest.approx(1.0, abs=1e-15)
    assert phi_xi(0, STEP, d3) == 1
    assert phi_xi(1, StepDensity(p2=0.5), d3) == 0
    assert phi_xi(2, STEP, d3) == pytest.approx(0.49, abs=1e-15)
    with pytest.raises(ValueError):
        phi_xi(3, STEP, d3)


def test_moment_examples():
    d3 = Deformation(3)
    for n in (1, 4, 7):
        assert moment(0, 0, WalkSpec(STEP, n, d3)) == 1
    q = cmath.exp(2j * math.pi / 3)
    th, p2 = STEP.theta, STEP.p2
    want = 2 * th**2 + (1 + q) * th**2 * (2 * p2 - 1) ** 2
    assert abs(moment(0, 2, WalkSpec(STEP, 2, d3)) - want) < 1e-14
    assert abs(moment_oracle(0, 2, WalkSpec(STEP, 2, d3)) - want) < 1e-14


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("k", range(6))
def test_x_moments_match_sign_enumeration(n, k):
    w = WalkSpec(STEP, n, Deformation(2))
    assert abs(moment(k, 0, w) - enumerate_x_moment(k, n, STEP)) < 1e-10


def test_moment_oracle_small_cases():
    d = Deformation(2)
    w = WalkSpec(STEP, 2, d)
    want = 2 * phi_x(2, STEP) + 2 * phi_x(1, STEP) ** 2
    assert abs(moment_oracle(2, 0, w) - want) < 1e-14
    assert moment_oracle(0, 0, WalkSpec(STEP, 5, d)) == 1


@pytest.mark.parametrize("N", [2, 3, 4])
def test_moment_equals_oracle_at_Q1(N):
    d = Deformation(N)
    for n in range(1, 6):
        w = WalkSpec(STEP, n, d)
        for k in range(5):
            for l in range(N):
                a, b = moment(k, l, w), moment_oracle(k, l, w)
                assert abs(a - b) <= 1e-10 * max(abs(b), 1e-15)


def test_oracle_sees_Q_but_formula_does_not():
    d = Deformation(3)
    w1, w2 = WalkSpec(STEP, 2, d, 1.0), WalkSpec(STEP, 2, d, 2.0)
    assert moment(1, 1, w1) == moment(1, 1, w2)
    assert abs(moment_oracle(1, 1, w2) - moment_oracle(1, 1, w1)) > 1e-3


def test_oracle_guard():
    d = Deformation(2)
    with pytest.raises(OracleGuardExceeded):
        moment_oracle(1, 0, WalkSpec(STEP, 9, d))
    with pytest.raises(OracleGuardExceeded):
        moment_oracle(6, 0, WalkSpec(STEP, 2, d))


def test_nilpotency_bound_is_an_error():
    w = WalkSpec(STEP, 3, Deformation(3))
    with pytest.raises(ValueError, match="nilpotency"):
        moment(0, 3, w)
    with pytest.raises(ValueError, match="nilpotency"):
        moment_oracle(0, 3, w)


@pytest.mark.parametrize("n", [1, 2, 17, 100])
def test_first_moments_closed_form(n):
    w = WalkSpec(STEP, n, Deformation(3))
    assert abs(moment(1, 0, w) - n * STEP.a * (2 * STEP.p1 - 1)) < 1e-12
    assert abs(moment(0, 1, w) - n * STEP.theta * (2 * STEP.p2 - 1)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(
    N=st.integers(2, 4),
    m=st.integers(1, 3),
    n=st.integers(1, 3),
    k=st.integers(0, 4),
    l=st.integers(0, 3),
)
def test_convolution_semigroup(N, m, n, k, l):
    l = l % N
    d = Deformation(N)
    w = WalkSpec(STEP, 1, d)
    total = 0j
    for i in range(k + 1):
        for j in range(l + 1):
            total += (
                multinomial(k, (i, k - i))
                * q_multinomial(l, (j, l - j), d)
                * moment(i, j, w.with_steps(m))
                * moment(k - i, l - j, w.with_steps(n))
            )
    assert abs(moment(k, l, w.with_steps(m + n)) - total) < 1e-10


@given(N=st.integers(2, 5), n=st.integers(1, 12), k=st.integers(0, 6))
def test_factorization(N, n, k):
    d = Deformation(N)
    w = WalkSpec(STEP, n, d)
    for l in range(N):
        assert abs(moment(k, l, w) - moment(k, 0, w) * moment(0, l, w)) <= 1e-12 * (1 + abs(moment(k, l, w)))


@given(n=st.integers(1, 20), k=st.integers(0, 4).map(lambda j: 2 * j + 1))
def test_symmetric_walk_odd_moments_vanish(n, k):
    sym = StepDensity(a=1.3, p1=0.5, theta=0.9, p2=0.5)
    d = Deformation(8)
    w = WalkSpec(sym, n, d)
    assert abs(moment(k, 0, w)) < 1e-12
    if k < 8:
        assert abs(moment(0, k, w)) < 1e-12


def test_expectation_examples():
    d = Deformation(3)
    w = WalkSpec(STEP, 4, d)
    assert expectation(SmashElement.one(d), w) == 1
    f = SmashElement.x(d) + 5
    assert abs(expectation(f, w) - (4 * (2 * STEP.p1 - 1) + 5)) < 1e-14
    w1 = w.with_steps(1)
    xy = SmashElement.monomial(1, 1, d)
    assert abs(expectation(xy, w1) - phi_x(1, STEP) * phi_xi(1, STEP, d)) < 1e-15
    with pytest.raises(ValueError):
        expectation(SmashElement.one(Deformation(2)), w)


def test_moment_table_order():
    w = WalkSpec(STEP, 3, Deformation(2))
    rows = moment_table(w, 2, 1)
    assert [(r[1], r[2]) for r in rows] == [(k, l) for k in range(3) for l in range(2)]
    assert rows[0][3] == 1


def test_walk_from_continuum_reproduces_drift_and_variance():
    c1, alpha1, t, n = 0.4, 0.8, 1.5, 50
    s = walk_from_continuum(c1, alpha1, t, n)
    w = WalkSpec(s, n, Deformation(2))
    mean = moment(1, 0, w).real
    var = moment(2, 0, w).real - mean**2
    assert mean == pytest.approx(c1 * t, rel=1e-12)
    assert var == pytest.approx(2 * alpha1 * t - (c1 * t) ** 2 / n, rel=1e-12)
    assert np.isclose(s.a**2 / 2, alpha1 * t / n)
