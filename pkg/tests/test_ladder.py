import math

import pytest

from oracles import anharmonic_ground
from weylsos import gram
from weylsos.ladder import (
    DenominatorFamily,
    EmptyList,
    LadderError,
    LadderOptions,
    LadderResult,
    LadderStep,
    OddDegree,
    ZeroReference,
    build_level,
    run,
    series_csv,
    shifted_bases,
    stop_select,
    symplectic_rescale,
)
from weylsos.newton import BasisSpec
from weylsos.scalar import I, Scalar
from weylsos.weyl import LADDER1, WeylElement, X, Y, number_operator, parse_element

ANHARMONIC = parse_element("-Y^2 + X^2 + X^4")

# optimum of the same identity solved with cvxpy/Clarabel, mu kept as a free variable
ANHARMONIC_CVXPY = [1.18225785, 1.32348226, 1.36907766, 1.38418525]
QUARTIC_LADDER_CVXPY = [1.32842712, 1.39672678]
NUMBER_OP_SQUARE_CVXPY_K0 = 0.99999997


@pytest.fixture(scope="module")
def anharmonic_run():
    return run(ANHARMONIC, DenominatorFamily.affine(-1), 5, shifted_bases(5))


# -- stop rule -----------------------------------------------------------------


def test_stop_select_examples():
    assert stop_select([1.0, 2.0, 3.0, 2.5]) == (2, 0.5)
    assert stop_select([5.0]) == (0, None)
    assert stop_select([1.0, 2.0, 3.0]) == (2, None)
    assert stop_select([3.0, 1.0]) == (0, 2.0)
    with pytest.raises(EmptyList):
        stop_select([])


def test_stop_select_uses_first_downturn():
    l, est = stop_select([1.0, 1.5, 1.4, 2.0, 1.0])
    assert l == 1 and est == pytest.approx(0.1)


# -- families --------------------------------------------------------------------


def test_family_factors():
    assert DenominatorFamily.affine(-1).factor(1) == WeylElement.constant(I) - X()
    assert DenominatorFamily.one_plus_x2().factor(3) == X() * X() + 1
    N = number_operator()
    fam = DenominatorFamily.number_op("1/2", [0, 1])
    assert fam.factor(1) == N + WeylElement.constant(Scalar(1) / 2)
    assert fam.factor(2) == N + WeylElement.constant(Scalar(3) / 2)
    assert fam.factor(3) == fam.factor(1)
    assert DenominatorFamily.two_n_plus_one().factor(1, LADDER1) == number_operator(LADDER1) * 2 + WeylElement.constant(1, LADDER1)
    assert DenominatorFamily.custom([X()]).denominator(1) == X()
    with pytest.raises(ValueError):
        DenominatorFamily.custom([X()]).factor(2)


def test_denominator_is_product():
    fam = DenominatorFamily.affine(-1)
    s = fam.factor(1)
    assert fam.denominator(3) == s * s * s
    assert fam.denominator(0) == WeylElement.constant(1)


def test_shifted_bases():
    b = shifted_bases(1)
    assert b[0] == BasisSpec.from_exponents([(0, 0), (1, 0), (2, 0), (0, 1)])
    assert b[1] == BasisSpec.from_exponents([(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1)])


# -- driver errors -----------------------------------------------------------------


def test_run_errors():
    fam = DenominatorFamily.one_plus_x2()
    with pytest.raises(OddDegree):
        run(X() * X() * X(), fam, 0)
    with pytest.raises(gram.NotHermitian):
        run(X() * Y(), fam, 0)
    with pytest.raises(LadderError):
        run(ANHARMONIC, fam, 2, shifted_bases(1))


# -- small runs ----------------------------------------------------------------------


def test_harmonic_oscillator_is_exact():
    res = run(parse_element("-Y^2 + X^2"), DenominatorFamily.one_plus_x2(), 0)
    assert abs(res.mus[0] - 1) < 1e-7
    assert res.steps[0].optimal


def test_number_op_square_sizes():
    c = parse_element("(X^2 - Y^2)^2")
    fam = DenominatorFamily.number_op("1/2", [0])
    sizes = [build_level(c, fam, k).n_basis for k in range(4)]
    assert sizes == [6, 15, 28, 45]
    res = run(c, fam, 0)
    assert abs(res.mus[0] - NUMBER_OP_SQUARE_CVXPY_K0) < 5e-6


def test_anharmonic_matches_cvxpy(anharmonic_run):
    for k, ref in enumerate(ANHARMONIC_CVXPY):
        assert anharmonic_run.steps[k].optimal
        assert abs(anharmonic_run.mus[k] - ref) < 5e-6


def test_anharmonic_monotone_and_below_eigenvalue(anharmonic_run):
    lam = anharmonic_ground(1.0)
    mus = [s.mu for s in anharmonic_run.steps if s.optimal]
    assert all(b >= a - 1e-6 for a, b in zip(mus, mus[1:]))
    assert all(mu <= lam + 1e-6 for mu in mus)


def test_anharmonic_certificates(anharmonic_run):
    for s in anharmonic_run.steps:
        assert s.residual < 1e-6
        assert s.min_eigenvalue > -1e-8


def test_quartic_ladder_blocks():
    c = parse_element("((a + a*)/r2)^4 + ((a - a*)/r2)^4", LADDER1)
    res = run(c, DenominatorFamily.two_n_plus_one(), 1, "dense", gram.Grading.ladder_z4())
    assert sorted(res.steps[0].block_sizes) == [1, 1, 2, 2]
    for k, ref in enumerate(QUARTIC_LADDER_CVXPY):
        assert abs(res.mus[k] - ref) < 5e-6


def test_polytope_mode_runs():
    res = run(ANHARMONIC, DenominatorFamily.affine(-1), 1, "polytope")
    assert all(s.optimal for s in res.steps)
    assert res.mus[0] == pytest.approx(ANHARMONIC_CVXPY[0], abs=1e-5)


# -- series output -------------------------------------------------------------------


def fake(mus, statuses=None):
    statuses = statuses or ["Optimal"] * len(mus)
    steps = [LadderStep(k, m, st_, 1, 1) for k, (m, st_) in enumerate(zip(mus, statuses))]
    return LadderResult(steps, None, None)


def test_series_csv_exact_value():
    assert series_csv(fake([2.0]), 2.0) == "k,mu,log10_rel_err\n0,2,-inf\n"


def test_series_csv_skips_non_optimal():
    text = series_csv(fake([1.0, 1.9], ["NumericalTrouble", "Optimal"]), 2.0)
    assert text.splitlines() == ["k,mu,log10_rel_err", f"1,1.9,{math.log10(0.05):.12g}"]
    assert series_csv(fake([1.0], ["Infeasible"]), 2.0) == "k,mu,log10_rel_err\n"


def test_series_csv_zero_reference():
    with pytest.raises(ZeroReference):
        series_csv(fake([1.0]), 0.0)


def test_series_error_decreases_early(anharmonic_run):
    text = series_csv(anharmonic_run, 1.392351642)
    errs = [float(line.split(",")[2]) for line in text.splitlines()[1:]]
    assert all(b < a for a, b in zip(errs, errs[1:]))


# -- rescaling -------------------------------------------------------------------------


def test_symplectic_rescale_keeps_relation():
    lam = Scalar(2)
    x, y = symplectic_rescale(X(), lam), symplectic_rescale(Y(), lam)
    assert y * x - x * y == WeylElement.constant(1)
    assert symplectic_rescale(ANHARMONIC, 1) == ANHARMONIC


def test_options_default_to_embedded():
    o = LadderOptions()
    assert o.solver == "embedded" and o.prune
