"""Shared constructors and exact oracles for the test modules."""
from fractions import Fraction

from shiftlab.weights import Constant, EpsilonSequence, FormulaPositions, RatioTelescope, SparseException


def sparse_pair():
    """Weights 2 except 1/k at 5*4^k + {1, 4} (u) and 5*4^k + {2, 3} (v)."""
    u = SparseException(2, FormulaPositions(offsets=(1, 4)))
    v = SparseException(2, FormulaPositions(offsets=(2, 3)))
    return u, v


def telescoped_pair(exponent=1):
    """Constant 2 against the telescoped weights with eps_n = n^-exponent."""
    return Constant(2), RatioTelescope(2, EpsilonSequence("power", coef=1, exponent=exponent))


def exact_products(spec, N):
    """``w_1...w_n`` for n = 0..N as fractions, multiplied directly."""
    out = [Fraction(1)]
    for n in range(1, N + 1):
        out.append(out[-1] * Fraction(spec.exact_weight(n)))
    return out


def oracle_log_products(spec, N):
    """``log|w_1...w_n|`` for n = 0..N without going through ``log_products``.

    Telescoped weights use the closed product ``base^n (1 + eps_n)``; every
    other kind multiplies exact fractions.
    """
    import math

    if isinstance(spec, RatioTelescope):
        b = math.log(abs(float(spec.base)))
        eps = [0.0] + [float(spec.epsilon.coef) * n ** -float(spec.epsilon.exponent) for n in range(1, N + 1)]
        return [n * b + math.log1p(eps[n]) for n in range(N + 1)]
    return [math.log(abs(x.numerator)) - math.log(x.denominator) for x in exact_products(spec, N)]


def fuzz_corpus(count=50, seed=20240611):
    """Deterministic mix of weight specs of every kind, moduli in [1/4, 4]."""
    import numpy as np

    from shiftlab.weights import PrefixThenConstant, ScaledCopy

    rng = np.random.default_rng(seed)

    def scalar():
        num = int(rng.integers(1, 17))
        den = int(rng.integers(1, 5))
        return Fraction(num, den) * (1 if rng.random() < 0.8 else -1)

    specs = []
    for i in range(count):
        kind = i % 5
        if kind == 0:
            specs.append(Constant(scalar()))
        elif kind == 1:
            specs.append(PrefixThenConstant(tuple(scalar() for _ in range(int(rng.integers(1, 5)))), scalar()))
        elif kind == 2:
            specs.append(ScaledCopy(scalar(), Constant(scalar())))
        elif kind == 3:
            offsets = tuple(sorted(rng.choice(4, size=int(rng.integers(1, 3)), replace=False) + 1))
            specs.append(SparseException(scalar(), FormulaPositions(offsets=tuple(int(o) for o in offsets))))
        else:
            exponent = Fraction(int(rng.integers(1, 7)), 2)
            specs.append(RatioTelescope(scalar(), EpsilonSequence("power", coef=1, exponent=exponent)))
    return specs
