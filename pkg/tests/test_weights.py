import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import fuzz_corpus, oracle_log_products, sparse_pair, telescoped_pair
from shiftlab.errors import EmptyWitnessSet, HorizonExceeded, InvalidWeight, NotSummable
from shiftlab.series import CONVERGES, DIVERGES
from shiftlab.verdict import Status
from shiftlab.weights import (Constant, EpsilonSequence, PrefixThenConstant, RatioTelescope, ScaledCopy,
                              SparseException, classify, eval_weight, fixed_point, log_products, spec_from_json,
                              summability, summability_certificate_check)

# ----------------------------------------------------------------- eval_weight

def test_constant_weight():
    assert eval_weight(Constant(2), 7) == 2


def test_sparse_exception_at_first_formula_position():
    u, _ = sparse_pair()
    # first exceptional index is 5 * 4 + 1 = 21 with value 1/1
    assert eval_weight(u, 21) == 1
    assert eval_weight(u, 24) == 1
    assert eval_weight(u, 22) == 2
    assert eval_weight(u, 81) == Fraction(1, 2)


def test_ratio_telescope_first_weight():
    spec = RatioTelescope(2, EpsilonSequence("power", coef=1, exponent=2))
    # 2 * (1 + 1) / (1 + 0)
    assert eval_weight(spec, 1) == 4
    assert eval_weight(spec, 2) == Fraction(2) * Fraction(5, 4) / 2


def test_explicit_epsilon_has_finite_capacity():
    spec = RatioTelescope(2, EpsilonSequence("explicit", values=(Fraction(1, 2), Fraction(1, 3))))
    assert eval_weight(spec, 2) == 2 * Fraction(4, 3) / Fraction(3, 2)
    with pytest.raises(HorizonExceeded):
        eval_weight(spec, 3)


def test_zero_weight_is_rejected():
    with pytest.raises((InvalidWeight, ValueError)):
        Constant(0)
    with pytest.raises((InvalidWeight, ValueError)):
        PrefixThenConstant((1, 0), 2)


def test_index_starts_at_one():
    with pytest.raises(ValueError):
        eval_weight(Constant(2), 0)


# ---------------------------------------------------------------- log_products

def test_constant_log_products():
    lp = log_products(Constant(2), 3)
    assert np.allclose(lp.logs + lp.lo, [0, math.log(2), 2 * math.log(2), 3 * math.log(2)], rtol=0, atol=1e-15)


def test_sparse_products_agree_on_multiples_of_five():
    u, v = sparse_pair()
    N = 5 * 4 ** 4 + 10
    R = log_products(u, N).minus(log_products(v, N))
    assert np.all(R[::5] == 0)


def test_sparse_log_ratio_at_exceptional_indices():
    u, v = sparse_pair()
    N = 5 * 4 ** 6 + 4
    R = log_products(u, N).minus(log_products(v, N))
    for k in range(1, 7):
        n = 5 * 4 ** k
        assert R[n + 1] == pytest.approx(-math.log(2 * k), abs=1e-12)
        assert R[n + 3] == pytest.approx(math.log(2 * k), abs=1e-12)


@pytest.mark.parametrize("spec", fuzz_corpus(15), ids=lambda s: s.key()[:40])
def test_log_products_match_exact_products(spec):
    N = 300
    L = log_products(spec, N)
    want = np.array(oracle_log_products(spec, N))
    assert np.allclose(L.logs + L.lo, want, rtol=1e-13, atol=1e-12)


def test_extending_horizon_keeps_entries():
    u, _ = sparse_pair()
    a = log_products(u, 500)
    b = log_products(u, 2000)
    assert np.array_equal(a.logs, b.logs[:501])
    assert np.array_equal(a.lo, b.lo[:501])


@given(st.integers(min_value=0, max_value=49), st.integers(min_value=1, max_value=400))
def test_increments_are_log_weights(i, n):
    spec = fuzz_corpus()[i]
    L = log_products(spec, n)
    inc = (L.logs[n] + L.lo[n]) - (L.logs[n - 1] + L.lo[n - 1])
    assert inc == pytest.approx(math.log(abs(float(eval_weight(spec, n)))), rel=1e-12, abs=1e-13)


# ---------------------------------------------------------------- summability

def test_constant_two_summability_limit():
    s = summability(Constant(2), 2)
    assert s.status == CONVERGES
    # sum 4^-n = 1/3
    assert s.limit == pytest.approx(1 / 3, rel=1e-14)


def test_unweighted_shift_diverges():
    assert summability(Constant(1), 2).status == DIVERGES


def test_half_weights_diverge_for_p1():
    assert summability(Constant(Fraction(1, 2)), 1).status == DIVERGES


@pytest.mark.parametrize("c", [Fraction(3, 2), 2, 3, Fraction(-5, 2)])
@pytest.mark.parametrize("p", [1, 2, 3.5])
def test_constant_partial_sum_closed_form(c, p):
    N = 5000
    s = summability(Constant(c), p, N)
    r = abs(float(c)) ** -p
    closed = r * (1 - r ** N) / (1 - r)
    assert s.partial_sum == pytest.approx(closed, rel=1e-12)


@given(st.integers(min_value=0, max_value=49), st.floats(min_value=1, max_value=4), st.floats(min_value=0, max_value=3))
def test_summability_monotone_in_p(i, p, dp):
    spec = fuzz_corpus()[i]
    if summability(spec, p, 5000).status == CONVERGES:
        assert summability(spec, p + dp, 5000).status != DIVERGES


def test_summability_rejects_small_p():
    with pytest.raises(ValueError):
        summability(Constant(2), 0.5)


# ------------------------------------------------------------------- classify

def test_classify_constant_two():
    assert all(v.status is Status.ESTABLISHED for v in classify(Constant(2), 2).values())


@pytest.mark.parametrize("p", [1, 2, 5])
def test_classify_unweighted(p):
    c = classify(Constant(1), p)
    assert c["hypercyclic"].refuted
    assert c["has_nontrivial_invariant_measure"].refuted


def test_constant_three_and_two_are_mixing():
    assert classify(Constant(3), 2)["mixing"].established
    assert classify(Constant(2), 2)["mixing"].established


def test_telescoped_weights_with_unit_base_are_not_hypercyclic():
    spec = RatioTelescope(1, EpsilonSequence("power", coef=1, exponent=1))
    assert classify(spec, 2, 10_000)["hypercyclic"].refuted


@pytest.mark.parametrize("spec", fuzz_corpus(), ids=lambda s: s.key()[:40])
def test_classify_implications(spec):
    c = classify(spec, 2, 20_000)
    if c["chaotic_fhc"].established:
        assert c["mixing"].established
    if c["mixing"].established:
        assert c["hypercyclic"].established
    assert c["chaotic_fhc"].status == c["has_nontrivial_invariant_measure"].status


# ---------------------------------------------------------------- fixed point

def test_fixed_point_constant_two():
    fp = fixed_point(Constant(2), 2, 4)
    assert fp.exact == tuple(Fraction(1, 2 ** n) for n in range(5))
    assert all(r == 0 for r in fp.residual())


def test_fixed_point_prefix():
    fp = fixed_point(PrefixThenConstant((3,), 2), 2, 3)
    assert fp.exact == (1, Fraction(1, 3), Fraction(1, 6), Fraction(1, 12))


def test_fixed_point_tail_bound():
    fp = fixed_point(Constant(2), 2, 10)
    # ||x - x_N||_2^2 = sum_{n > 10} 4^-n = 4^-10 / 3
    assert fp.tail_bound >= math.sqrt(4.0 ** -10 / 3) * (1 - 1e-12)
    assert fp.tail_bound <= 2 * math.sqrt(4.0 ** -10 / 3)


def test_fixed_point_needs_summability():
    with pytest.raises(NotSummable):
        fixed_point(Constant(1), 2, 5)


# ------------------------------------------------------- bounded orbit check

def test_certificate_check_on_fixed_point():
    # B^n x = x as long as n stays inside the truncation
    fp = fixed_point(Constant(2), 2, 200)
    v = summability_certificate_check(list(fp.exact), range(100), Constant(2), 2, (2.0, 0.5))
    assert v.established
    assert v.evidence["inf_first_coordinate"] == 1.0


def test_certificate_check_unweighted_fails_on_long_sets():
    x = [1.0, 0.5, 0.25]
    v = summability_certificate_check(x, range(10), Constant(1), 2, (2.0, 0.5))
    assert v.refuted
    assert "first_coordinate" in v.evidence["failed"]


def test_certificate_check_empty_set():
    with pytest.raises(EmptyWitnessSet):
        summability_certificate_check([1.0], [], Constant(2), 2, (1.0, 1.0))


# ---------------------------------------------------------------------- JSON

@pytest.mark.parametrize("spec", fuzz_corpus(10) + list(sparse_pair()) + list(telescoped_pair()),
                         ids=lambda s: s.key()[:40])
def test_json_round_trip(spec):
    assert spec_from_json(spec.to_json()) == spec


def test_complex_spec_round_trip():
    spec = ScaledCopy(complex(0, 2), Constant(1, "complex"), "complex")
    back = spec_from_json(spec.to_json())
    assert back == spec and back.field_dim == 2


def test_unknown_kind():
    with pytest.raises(ValueError):
        spec_from_json({"kind": "bogus"})


def test_sparse_positions_strictly_increasing():
    with pytest.raises(ValueError):
        SparseException(2, ((3, 1), (3, 2)))
