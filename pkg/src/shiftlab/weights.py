"""Weight sequences of backward shifts and the criteria read off their products.

A weighted backward shift acts by ``B_w e_n = w_n e_{n-1}``. Almost every
dynamical property of ``B_w`` depends on the partial products
``w_1 ... w_n``, which are kept here as cumulative log-moduli
``L_n = sum_{k<=n} log|w_k|`` plus accumulated phases.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Any, Sequence

import numpy as np

from . import _dd
from .errors import EmptyWitnessSet, HorizonExceeded, InvalidWeight, NotSummable
from .series import CONVERGES, DIVERGES, UNDECIDED, certify_log_terms, window_start
from .verdict import DEFAULT, Status, Tolerances, Verdict

Scalar = Any  # int, Fraction, float or complex

# ---------------------------------------------------------------- scalars


def parse_scalar(obj) -> Scalar:
    """Read a scalar from its JSON form.

    Accepts numbers, rational strings such as ``"1/3"``, complex strings
    such as ``"1+2j"`` and ``{"re": .., "im": ..}`` objects.
    """
    if isinstance(obj, bool):
        raise ValueError("booleans are not scalars")
    if isinstance(obj, (int, Fraction)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, complex):
        return obj
    if isinstance(obj, dict):
        return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))
    if isinstance(obj, str):
        try:
            return Fraction(obj)
        except ValueError:
            return complex(obj.replace(" ", ""))
    raise ValueError(f"cannot read scalar from {obj!r}")


def scalar_to_json(x: Scalar):
    if isinstance(x, bool):
        raise ValueError("booleans are not scalars")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return float(x)


def _exact(x: Scalar) -> Fraction | None:
    if isinstance(x, complex):
        return Fraction(x.real) if x.imag == 0 else None
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float) and math.isfinite(x):
        return Fraction(x)
    return None


def _as_float(x: Scalar, complex_field: bool):
    return complex(x) if complex_field else float(x)


# ------------------------------------------------------- epsilon sequences


@dataclass(frozen=True)
class EpsilonSequence:
    """Non-negative sequence with ``eps_0 = 0`` driving a telescoping weight.

    ``form`` is ``"power"`` (``coef * n**-exponent``), ``"geometric"``
    (``coef * ratio**n``) or ``"explicit"`` (``values[n-1]`` for n = 1..K).
    """

    form: str = "power"
    coef: Scalar = 1
    exponent: Scalar = 1
    ratio: Scalar = Fraction(1, 2)
    values: tuple = ()

    def __post_init__(self):
        if self.form not in ("power", "geometric", "explicit"):
            raise ValueError(f"unknown epsilon form {self.form!r}")
        if self.form == "explicit":
            if any(float(v) < 0 for v in self.values):
                raise ValueError("epsilon values must be non-negative")
        elif float(self.coef) < 0:
            raise ValueError("epsilon coefficient must be non-negative")
        if self.form == "power" and float(self.exponent) < 0:
            raise ValueError("power exponent must be non-negative")
        if self.form == "geometric" and not 0 < float(self.ratio) <= 1:
            raise ValueError("geometric ratio must lie in (0, 1]")

    @property
    def capacity(self) -> float:
        return len(self.values) if self.form == "explicit" else math.inf

    def _check(self, N: int):
        if N > self.capacity:
            raise HorizonExceeded(f"epsilon sequence defined up to n={self.capacity}, requested {N}")

    def array(self, N: int) -> np.ndarray:
        """``eps_0, ..., eps_N`` as floats."""
        self._check(N)
        n = np.arange(1, N + 1, dtype=float)
        if self.form == "power":
            tail = float(self.coef) * n ** (-float(self.exponent))
        elif self.form == "geometric":
            tail = float(self.coef) * float(self.ratio) ** n
        else:
            tail = np.array([float(v) for v in self.values[:N]], dtype=float)
        return np.concatenate([[0.0], tail])

    def exact(self, n: int) -> Fraction | None:
        if n == 0:
            return Fraction(0)
        self._check(n)
        if self.form == "power":
            c, e = _exact(self.coef), _exact(self.exponent)
            if c is None or e is None or e.denominator != 1:
                return None
            return c / Fraction(n) ** int(e)
        if self.form == "geometric":
            c, r = _exact(self.coef), _exact(self.ratio)
            return None if c is None or r is None else c * r ** n
        return _exact(self.values[n - 1])

    def sup(self) -> float:
        if self.form == "power":
            return float(self.coef)
        if self.form == "geometric":
            return float(self.coef) * float(self.ratio)
        return max((float(v) for v in self.values), default=0.0)

    def to_json(self) -> dict:
        if self.form == "power":
            return {"form": "power", "coef": scalar_to_json(self.coef), "exponent": scalar_to_json(self.exponent)}
        if self.form == "geometric":
            return {"form": "geometric", "coef": scalar_to_json(self.coef), "ratio": scalar_to_json(self.ratio)}
        return {"form": "explicit", "values": [scalar_to_json(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj: dict) -> "EpsilonSequence":
        form = obj.get("form", "power")
        if form == "power":
            return cls("power", parse_scalar(obj.get("coef", 1)), parse_scalar(obj.get("exponent", 1)))
        if form == "geometric":
            return cls("geometric", parse_scalar(obj.get("coef", 1)), ratio=parse_scalar(obj["ratio"]))
        if form == "explicit":
            return cls("explicit", values=tuple(parse_scalar(v) for v in obj["values"]))
        raise ValueError(f"unknown epsilon form {form!r}")


# ------------------------------------------------------------ weight specs


@dataclass(frozen=True)
class LogProductSeries:
    """Cumulative log-moduli ``L_0 = 0, ..., L_N`` and phases of a weight sequence.

    ``logs`` holds the correctly rounded values; ``lo`` holds the residuals so
    that ``logs + lo`` carries about 32 significant digits. Differences of
    two series should go through :meth:`minus` to keep that accuracy.
    """

    horizon: int
    logs: np.ndarray
    lo: np.ndarray
    phases: np.ndarray | None = None

    def minus(self, other: "LogProductSeries") -> np.ndarray:
        n = min(self.horizon, other.horizon) + 1
        return _dd.sub((self.logs[:n], self.lo[:n]), (other.logs[:n], other.lo[:n]))

    def increments(self) -> np.ndarray:
        """``L_n - L_{n-1}`` for n = 1..N, i.e. ``log|w_n|``."""
        return (self.logs[1:] - self.logs[:-1]) + (self.lo[1:] - self.lo[:-1])

    def shifted_difference(self, start: np.ndarray, length: int) -> np.ndarray:
        """``L_{j+length} - L_j`` for every ``j`` in ``start``."""
        a = start + length
        return (self.logs[a] - self.logs[start]) + (self.lo[a] - self.lo[start])


class WeightSpec:
    """Base class of exactly evaluable weight sequences ``(w_n)_{n>=1}``.

    Subclasses implement ``_values``, ``_exact_value`` and ``to_json`` and may
    override ``_log_products`` with a closed form.
    """

    field: str

    @property
    def complex_field(self) -> bool:
        return self.field == "complex"

    @property
    def field_dim(self) -> int:
        return 2 if self.complex_field else 1

    # -- evaluation
    def weight(self, n: int) -> Scalar:
        """``w_n``: exact (int or Fraction) when the rule is rational, else float/complex."""
        if n < 1:
            raise ValueError("weights are indexed from 1")
        self._check_horizon(n)
        x = self._exact_value(n)
        if x is None:
            x = self._values(n)[-1].item()
        if x == 0 or (isinstance(x, float) and not math.isfinite(x)):
            raise InvalidWeight(f"w_{n} = {x}")
        return x

    def values(self, N: int) -> np.ndarray:
        """``w_1, ..., w_N`` as a float or complex array."""
        self._check_horizon(N)
        w = self._values(N)
        if w.size and (not np.all(np.isfinite(w)) or np.any(w == 0)):
            bad = int(np.flatnonzero((w == 0) | ~np.isfinite(w))[0]) + 1
            raise InvalidWeight(f"w_{bad} = {w[bad - 1]}")
        return w

    def exact_weight(self, n: int) -> Fraction | None:
        self._check_horizon(n)
        return self._exact_value(n)

    @property
    def is_rational(self) -> bool:
        return not self.complex_field and self._exact_value(1) is not None

    def _check_horizon(self, N: int):
        if N > self.capacity:
            raise HorizonExceeded(f"weights defined up to n={self.capacity}, requested {N}")

    @property
    def capacity(self) -> float:
        return math.inf

    # -- products
    def _log_abs(self, N: int) -> np.ndarray:
        return np.log(np.abs(self.values(N)))

    def _log_products(self, N: int):
        return _dd.cumsum(self._log_abs(N))

    def _phases(self, N: int) -> np.ndarray:
        ang = np.angle(self.values(N))
        return np.mod(np.concatenate([[0.0], np.cumsum(ang)]), 2 * math.pi)

    def eventual_tail(self) -> tuple[int, Scalar] | None:
        """``(n0, c)`` when ``w_n = c`` for every ``n >= n0``, else None."""
        return None

    def log_growth(self) -> tuple[float, bool] | None:
        """``(s, bounded)`` when ``L_n = s n + r_n`` with ``r_n = o(n)`` by construction.

        ``bounded`` tells whether ``r_n`` is also bounded. None when unknown.
        """
        t = self.eventual_tail()
        return None if t is None else (math.log(abs(t[1])), True)

    def lower_bound(self) -> float | None:
        """A certified lower bound of ``|w_n|``, 0.0 when the infimum is 0, None if unknown."""
        return None

    def upper_bound(self) -> float | None:
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    def key(self) -> str:
        import json

        return json.dumps(self.to_json(), sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, WeightSpec) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _check_field(field_name: str, *scalars):
    if field_name not in ("real", "complex"):
        raise ValueError(f"field must be 'real' or 'complex', got {field_name!r}")
    if field_name == "real":
        for s in scalars:
            if isinstance(s, complex):
                raise ValueError("complex scalar in a real weight spec")
    for s in scalars:
        if s == 0:
            raise InvalidWeight("zero weight in spec")


@dataclass(frozen=True, eq=False)
class Constant(WeightSpec):
    value: Scalar
    field: str = "real"

    def __post_init__(self):
        _check_field(self.field, self.value)

    def _values(self, N):
        return np.full(N, _as_float(self.value, self.complex_field))

    def _exact_value(self, n):
        return None if self.complex_field else _exact(self.value)

    def _log_products(self, N):
        return _dd.normalize(*_dd.scale_int(np.arange(N + 1), math.log(abs(self.value))))

    def _phases(self, N):
        return np.mod(np.arange(N + 1) * cmath.phase(complex(self.value)), 2 * math.pi)

    def eventual_tail(self):
        return 1, self.value

    def lower_bound(self):
        return float(abs(self.value))

    def upper_bound(self):
        return float(abs(self.value))

    def to_json(self):
        return {"kind": "constant", "value": scalar_to_json(self.value), "field": self.field}


@dataclass(frozen=True, eq=False)
class ScaledCopy(WeightSpec):
    """``w_n = scalar * base_n``."""

    scalar: Scalar
    base: WeightSpec
    field: str = "real"

    def __post_init__(self):
        _check_field(self.field, self.scalar)
        if self.base.complex_field and not self.complex_field:
            raise ValueError("a real scaled copy needs a real base")

    @property
    def capacity(self):
        return self.base.capacity

    def _values(self, N):
        return _as_float(self.scalar, self.complex_field) * self.base._values(N)

    def _exact_value(self, n):
        a = None if self.complex_field else _exact(self.scalar)
        b = self.base._exact_value(n)
        return None if a is None or b is None else a * b

    def _log_products(self, N):
        own = _dd.scale_int(np.arange(N + 1), math.log(abs(self.scalar)))
        return _dd.add(own, self.base._log_products(N))

    def _phases(self, N):
        own = np.arange(N + 1) * cmath.phase(complex(self.scalar))
        base = self.base._phases(N) if self.base.complex_field else _real_phases(self.base, N)
        return np.mod(own + base, 2 * math.pi)

    def eventual_tail(self):
        t = self.base.eventual_tail()
        return None if t is None else (t[0], self.scalar * t[1])

    def log_growth(self):
        g = self.base.log_growth()
        return None if g is None else (math.log(abs(self.scalar)) + g[0], g[1])

    def lower_bound(self):
        b = self.base.lower_bound()
        return None if b is None else float(abs(self.scalar)) * b

    def upper_bound(self):
        b = self.base.upper_bound()
        return None if b is None else float(abs(self.scalar)) * b

    def to_json(self):
        return {"kind": "scaled", "scalar": scalar_to_json(self.scalar), "base": self.base.to_json(), "field": self.field}


@dataclass(frozen=True, eq=False)
class PrefixThenConstant(WeightSpec):
    prefix: tuple
    tail: Scalar
    field: str = "real"

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        _check_field(self.field, self.tail, *self.prefix)

    def _values(self, N):
        k = len(self.prefix)
        dtype = complex if self.complex_field else float
        out = np.full(N, _as_float(self.tail, self.complex_field), dtype=dtype)
        m = min(k, N)
        out[:m] = [_as_float(x, self.complex_field) for x in self.prefix[:m]]
        return out

    def _exact_value(self, n):
        if self.complex_field:
            return None
        x = self.prefix[n - 1] if n <= len(self.prefix) else self.tail
        return _exact(x)

    def _log_products(self, N):
        k = min(len(self.prefix), N)
        head = _dd.cumsum(np.log(np.abs(self._values(k))))
        if N == k:
            return head
        steps = np.arange(1, N - k + 1)
        tail = _dd.scale_int(steps, math.log(abs(self.tail)))
        base = (np.full(steps.size, head[0][-1]), np.full(steps.size, head[1][-1]))
        hi, lo = _dd.add(base, tail)
        return np.concatenate([head[0], hi]), np.concatenate([head[1], lo])

    def eventual_tail(self):
        return len(self.prefix) + 1, self.tail

    def lower_bound(self):
        return float(min(abs(x) for x in (*self.prefix, self.tail)))

    def upper_bound(self):
        return float(max(abs(x) for x in (*self.prefix, self.tail)))

    def to_json(self):
        return {"kind": "prefix", "prefix": [scalar_to_json(x) for x in self.prefix],
                "tail": scalar_to_json(self.tail), "field": self.field}


@dataclass(frozen=True)
class FormulaPositions:
    """Exceptional positions ``scale * ratio**k + offset`` for k >= k_start.

    ``value`` is either a scalar or the string ``"reciprocal"`` meaning ``1/k``.
    """

    scale: int = 5
    ratio: int = 4
    offsets: tuple = (1, 4)
    value: Any = "reciprocal"
    k_start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(sorted(self.offsets)))
        if self.ratio < 2 or self.scale < 1 or self.k_start < 1:
            raise ValueError("formula positions need scale >= 1, ratio >= 2, k_start >= 1")
        k = self.k_start
        if self.scale * self.ratio ** k + self.offsets[0] < 1:
            raise ValueError("formula positions must be >= 1")
        if self.scale * self.ratio ** k + self.offsets[-1] >= self.scale * self.ratio ** (k + 1) + self.offsets[0]:
            raise ValueError("formula positions must be strictly increasing")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("duplicate offsets")

    def value_at(self, k: int) -> Scalar:
        return Fraction(1, k) if self.value == "reciprocal" else self.value

    def items(self, N: int):
        k = self.k_start
        while self.scale * self.ratio ** k + self.offsets[0] <= N:
            for off in self.offsets:
                n = self.scale * self.ratio ** k + off
                if n <= N:
                    yield n, self.value_at(k)
            k += 1

    def lookup(self, n: int) -> Scalar | None:
        k = self.k_start
        while self.scale * self.ratio ** k + self.offsets[0] <= n:
            if n - self.scale * self.ratio ** k in self.offsets:
                return self.value_at(k)
            k += 1
        return None

    def to_json(self):
        return {"positions": "formula",
                "params": {"scale": self.scale, "ratio": self.ratio, "offsets": list(self.offsets),
                           "value": self.value if self.value == "reciprocal" else scalar_to_json(self.value),
                           "k_start": self.k_start}}


@dataclass(frozen=True, eq=False)
class SparseException(WeightSpec):
    """``w_n = base`` except at listed or formula-generated positions."""

    base: Scalar
    exceptions: Any = ()  # tuple of (n, value) pairs or FormulaPositions
    field: str = "real"

    def __post_init__(self):
        _check_field(self.field, self.base)
        if not isinstance(self.exceptions, FormulaPositions):
            items = tuple((int(n), v) for n, v in self.exceptions)
            pos = [n for n, _ in items]
            if any(n < 1 for n in pos) or any(b <= a for a, b in zip(pos, pos[1:])):
                raise ValueError("exception positions must be >= 1 and strictly increasing")
            _check_field(self.field, *[v for _, v in items])
            object.__setattr__(self, "exceptions", items)
        elif self.exceptions.value != "reciprocal":
            _check_field(self.field, self.exceptions.value)

    def _items(self, N):
        if isinstance(self.exceptions, FormulaPositions):
            return list(self.exceptions.items(N))
        return [(n, v) for n, v in self.exceptions if n <= N]

    def _values(self, N):
        dtype = complex if self.complex_field else float
        out = np.full(N, _as_float(self.base, self.complex_field), dtype=dtype)
        for n, v in self._items(N):
            out[n - 1] = _as_float(v, self.complex_field)
        return out

    def _exact_value(self, n):
        if self.complex_field:
            return None
        if isinstance(self.exceptions, FormulaPositions):
            v = self.exceptions.lookup(n)
        else:
            v = dict(self.exceptions).get(n)
        return _exact(self.base if v is None else v)

    def log_growth(self):
        if isinstance(self.exceptions, FormulaPositions):
            # O(log n) exceptions up to n, each shifting L_n by O(log n)
            return math.log(abs(self.base)), False
        return super().log_growth()

    def eventual_tail(self):
        if isinstance(self.exceptions, FormulaPositions):
            return None
        last = self.exceptions[-1][0] if self.exceptions else 0
        return last + 1, self.base

    def lower_bound(self):
        if isinstance(self.exceptions, FormulaPositions):
            if self.exceptions.value == "reciprocal":
                return 0.0
            return float(min(abs(self.base), abs(self.exceptions.value)))
        return float(min([abs(self.base)] + [abs(v) for _, v in self.exceptions]))

    def upper_bound(self):
        if isinstance(self.exceptions, FormulaPositions):
            v = 1.0 if self.exceptions.value == "reciprocal" else abs(self.exceptions.value)
            return float(max(abs(self.base), v))
        return float(max([abs(self.base)] + [abs(v) for _, v in self.exceptions]))

    def to_json(self):
        if isinstance(self.exceptions, FormulaPositions):
            exc = self.exceptions.to_json()
        else:
            exc = {"positions": "list", "params": {"items": [[n, scalar_to_json(v)] for n, v in self.exceptions]}}
        return {"kind": "sparse", "base": scalar_to_json(self.base), "exceptions": exc, "field": self.field}


@dataclass(frozen=True, eq=False)
class RatioTelescope(WeightSpec):
    """``w_n = base * (1 + eps_n) / (1 + eps_{n-1})``, so ``w_1...w_n = base^n (1 + eps_n)``."""

    base: Scalar
    epsilon: EpsilonSequence = field(default_factory=EpsilonSequence)
    field: str = "real"

    def __post_init__(self):
        _check_field(self.field, self.base)

    @property
    def capacity(self):
        return self.epsilon.capacity

    def _values(self, N):
        e = self.epsilon.array(N)
        return _as_float(self.base, self.complex_field) * (1 + e[1:]) / (1 + e[:-1])

    def _exact_value(self, n):
        if self.complex_field:
            return None
        b, e1, e0 = _exact(self.base), self.epsilon.exact(n), self.epsilon.exact(n - 1)
        if b is None or e1 is None or e0 is None:
            return None
        return b * (1 + e1) / (1 + e0)

    def _log_abs(self, N):
        l1p = np.log1p(self.epsilon.array(N))
        return math.log(abs(self.base)) + (l1p[1:] - l1p[:-1])

    def _log_products(self, N):
        own = _dd.scale_int(np.arange(N + 1), math.log(abs(self.base)))
        l1p = np.log1p(self.epsilon.array(N))
        return _dd.add(own, (l1p, np.zeros_like(l1p)))

    def _phases(self, N):
        return np.mod(np.arange(N + 1) * cmath.phase(complex(self.base)), 2 * math.pi)

    def log_growth(self):
        # w_1...w_n = base^n (1 + eps_n) with 0 <= eps_n <= sup eps
        return math.log(abs(self.base)), True

    def lower_bound(self):
        return float(abs(self.base)) / (1 + self.epsilon.sup())

    def upper_bound(self):
        return float(abs(self.base)) * (1 + self.epsilon.sup())

    def to_json(self):
        return {"kind": "ratio", "base": scalar_to_json(self.base), "epsilon": self.epsilon.to_json(), "field": self.field}


def _real_phases(spec: WeightSpec, N: int) -> np.ndarray:
    """Phases of real products: pi times the parity of negative factors."""
    neg = np.concatenate([[0], np.cumsum(spec._values(N).real < 0)])
    return math.pi * (neg % 2)


# ---------------------------------------------------------------- JSON I/O


def spec_from_json(obj: dict) -> WeightSpec:
    """Build a :class:`WeightSpec` from its JSON object."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("weight spec must be an object with a 'kind' field")
    kind = obj["kind"]
    fld = obj.get("field", "real")
    if kind == "constant":
        return Constant(parse_scalar(obj["value"]), fld)
    if kind == "scaled":
        return ScaledCopy(parse_scalar(obj["scalar"]), spec_from_json(obj["base"]), fld)
    if kind == "prefix":
        return PrefixThenConstant(tuple(parse_scalar(x) for x in obj["prefix"]), parse_scalar(obj["tail"]), fld)
    if kind == "sparse":
        exc = obj.get("exceptions", [])
        if isinstance(exc, dict):
            params = exc.get("params", {})
            if exc.get("positions") == "formula":
                value = params.get("value", "reciprocal")
                exceptions = FormulaPositions(
                    scale=int(params.get("scale", 5)), ratio=int(params.get("ratio", 4)),
                    offsets=tuple(int(o) for o in params.get("offsets", (1, 4))),
                    value=value if value == "reciprocal" else parse_scalar(value),
                    k_start=int(params.get("k_start", 1)))
            elif exc.get("positions") == "list":
                exceptions = tuple((int(n), parse_scalar(v)) for n, v in params.get("items", []))
            else:
                raise ValueError("sparse positions must be 'formula' or 'list'")
        else:
            exceptions = tuple((int(n), parse_scalar(v)) for n, v in exc)
        return SparseException(parse_scalar(obj["base"]), exceptions, fld)
    if kind == "ratio":
        return RatioTelescope(parse_scalar(obj["base"]), EpsilonSequence.from_json(obj.get("epsilon", {})), fld)
    raise ValueError(f"unknown weight kind {kind!r}")


# ------------------------------------------------------------- operations


def eval_weight(spec: WeightSpec, n: int) -> Scalar:
    """Return ``w_n``, exactly when the rule is rational."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return spec.weight(n)


def log_products(spec: WeightSpec, N: int) -> LogProductSeries:
    """Cumulative log-moduli ``L_0..L_N`` and phases, computed in log domain."""
    if N < 0:
        raise ValueError("N must be >= 0")
    spec.values(N)  # validates every weight up to N
    hi, lo = spec._log_products(N)
    phases = spec._phases(N) if spec.complex_field else None
    return LogProductSeries(N, np.asarray(hi, dtype=float), np.asarray(lo, dtype=float), phases)


@dataclass(frozen=True)
class SummabilityVerdict:
    """Status of ``S_p = sum_n 1/|w_1...w_n|^p`` at a finite horizon."""

    status: str
    partial_sum: float
    horizon: int
    tail_rule: str
    limit: float | None = None
    tail_bound: float | None = None
    exponent: float | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "partial_sum": self.partial_sum, "horizon": self.horizon,
                "tail_rule": self.tail_rule, "limit": self.limit, "tail_bound": self.tail_bound,
                "exponent": self.exponent}


def summability(spec: WeightSpec, p: float = 2.0, horizon: int | None = None,
                config: Tolerances = DEFAULT) -> SummabilityVerdict:
    """Decide convergence of ``sum_n exp(-p L_n)``.

    Eventually constant weights are decided symbolically with a closed-form
    limit. Otherwise the trailing-window rules of :mod:`shiftlab.series`
    apply.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    N = config.horizon if horizon is None else int(horizon)
    lp = log_products(spec, N)
    log_terms = -p * (lp.logs[1:] + lp.lo[1:])
    with np.errstate(over="ignore"):
        cert = certify_log_terms(log_terms, tol=config)
    tail = spec.eventual_tail()
    if tail is not None and N >= 1:
        n0, c = tail
        c = float(abs(c))
        if c <= 1:
            return SummabilityVerdict(DIVERGES, cert.partial_sum, N, "constant_tail_modulus_le_1")
        if n0 <= N + 1:
            r = c ** (-p)
            head = float(np.exp(log_terms[: n0 - 1]).sum()) if n0 > 1 else 0.0
            anchor = math.exp(-p * lp.logs[n0 - 1])
            limit = head + anchor * r / (1 - r)
            tail_bound = math.exp(-p * lp.logs[N]) * r / (1 - r)
            return SummabilityVerdict(CONVERGES, cert.partial_sum, N, "constant_tail_geometric",
                                      limit, tail_bound, r)
    limit = None
    if cert.status == CONVERGES and cert.tail_bound is not None:
        limit = cert.partial_sum + cert.tail_bound
    return SummabilityVerdict(cert.status, cert.partial_sum, N, cert.tail_rule, limit, cert.tail_bound, cert.exponent)


def _status_from_series(status: str) -> Status:
    return {CONVERGES: Status.ESTABLISHED, DIVERGES: Status.REFUTED}.get(status, Status.UNDECIDED)


def classify(spec: WeightSpec, p: float = 2.0, horizon: int | None = None,
             config: Tolerances = DEFAULT) -> dict[str, Verdict]:
    """Hypercyclicity, mixing, chaos/frequent hypercyclicity and invariant measures.

    Returns a dict with keys ``hypercyclic``, ``mixing``, ``chaotic_fhc`` and
    ``has_nontrivial_invariant_measure``.
    """
    N = config.horizon if horizon is None else int(horizon)
    lp = log_products(spec, N)
    L = lp.logs
    summ = summability(spec, p, N, config)
    ev = {"horizon": N, "max_log_product": float(L.max()), "threshold": config.log_divergence}
    tail = spec.eventual_tail()
    growth = spec.log_growth()

    if tail is not None:
        grows = abs(tail[1]) > 1
        st = Status.ESTABLISHED if grows else Status.REFUTED
        ev_t = {**ev, "tail_start": tail[0], "tail_modulus": float(abs(tail[1]))}
        hyper = Verdict(st, "eventual_constant_tail", "hypercyclic", ev_t)
        mixing = Verdict(st, "eventual_constant_tail", "mixing", ev_t)
    elif growth is not None and (growth[0] != 0 or growth[1]):
        # L_n = s n + o(n); with s = 0 the remainder is bounded, so L_n is too
        st = Status.ESTABLISHED if growth[0] > 0 else Status.REFUTED
        ev_g = {**ev, "log_slope": growth[0], "bounded_remainder": growth[1]}
        hyper = Verdict(st, "linear_log_growth", "hypercyclic", ev_g)
        mixing = Verdict(st, "linear_log_growth", "mixing", ev_g)
    else:
        w0 = window_start(N + 1, config)
        tail_min = float(L[w0:].min())
        if L.max() > config.log_divergence:
            hyper = Verdict(Status.ESTABLISHED, "products_exceed_threshold", "hypercyclic", ev)
        else:
            hyper = Verdict(Status.UNDECIDED, "products_exceed_threshold", "hypercyclic", ev)
        ev_m = {**ev, "trailing_min_log_product": tail_min}
        if tail_min > config.log_divergence:
            mixing = Verdict(Status.ESTABLISHED, "products_tend_to_infinity", "mixing", ev_m)
        else:
            mixing = Verdict(Status.UNDECIDED, "products_tend_to_infinity", "mixing", ev_m)

    st = _status_from_series(summ.status)
    ev_s = {"horizon": N, "p": p, "summability": summ.to_dict()}
    chaotic = Verdict(st, "summable_inverse_products", "chaotic_fhc", ev_s)
    measure = Verdict(st, "summable_inverse_products", "has_nontrivial_invariant_measure", ev_s)

    # terms of a convergent series tend to 0, hence L_n -> infinity
    if chaotic.established and not mixing.established:
        mixing = Verdict(Status.ESTABLISHED, "summable_inverse_products", "mixing", {**ev, "via": "summability"})
    if mixing.established and not hyper.established:
        hyper = Verdict(Status.ESTABLISHED, mixing.rule, "hypercyclic", {**ev, "via": "mixing"})
    return {"hypercyclic": hyper, "mixing": mixing, "chaotic_fhc": chaotic,
            "has_nontrivial_invariant_measure": measure}


@dataclass(frozen=True)
class FixedPoint:
    """Truncation ``x_N`` of the fixed point ``e_0 + sum_n e_n / (w_1...w_n)``.

    ``exact`` holds the coordinates as fractions when every weight is rational.
    ``tail_bound`` bounds ``||x - x_N||_p``.
    """

    values: np.ndarray
    exact: tuple | None
    tail_bound: float
    p: float
    spec: WeightSpec

    def residual(self) -> list:
        """``(B_w x_N - x_N)_j`` for j = 0..N-1, exact when possible."""
        N = len(self.values) - 1
        if self.exact is not None:
            return [self.spec.exact_weight(j + 1) * self.exact[j + 1] - self.exact[j] for j in range(N)]
        w = self.spec.values(N)
        return list(w * self.values[1:] - self.values[:-1])


def fixed_point(spec: WeightSpec, p: float, N: int, horizon: int | None = None,
                config: Tolerances = DEFAULT) -> FixedPoint:
    """Truncated fixed point of ``B_w`` with a certified ``l_p`` tail bound."""
    H = max(N, config.horizon if horizon is None else int(horizon))
    summ = summability(spec, p, H, config)
    if summ.status != CONVERGES or summ.tail_bound is None:
        raise NotSummable(f"sum 1/|w1...wn|^{p} not certified convergent ({summ.tail_rule})")
    lp = log_products(spec, H)
    L = lp.logs + lp.lo
    between = float(np.exp(-p * L[N + 1:]).sum())
    tail_bound = (between + summ.tail_bound) ** (1.0 / p)
    mod = np.exp(-L[: N + 1])
    if spec.complex_field:
        values = mod * np.exp(-1j * lp.phases[: N + 1])
    else:
        values = mod * np.cos(_real_phases(spec, N))
    exact = None
    if spec.is_rational:
        coords = [Fraction(1)]
        for n in range(1, N + 1):
            coords.append(coords[-1] / spec.exact_weight(n))
        exact = tuple(coords)
        values = np.array([float(c) for c in coords])
    return FixedPoint(values, exact, tail_bound, p, spec)


def summability_certificate_check(x: Sequence, N_set: Sequence[int], spec: WeightSpec, p: float,
                                  bounds: tuple[float, float], horizon: int | None = None,
                                  config: Tolerances = DEFAULT) -> Verdict:
    """Check an orbit that stays bounded and away from ``ker e_0*`` on a set of times.

    If ``sup ||B^n x|| <= C1`` and ``inf |(B^n x)_0| >= C2 > 0`` along a set of
    positive upper density, ``S_p`` must be finite. The returned verdict is
    Established when the hypotheses hold and the summability rule agrees,
    Refuted when a hypothesis fails or the two disagree (``contradiction``).
    """
    from .orbits import shift_power

    times = sorted(int(n) for n in N_set)
    if not times:
        raise EmptyWitnessSet("the set of times is empty")
    C1, C2 = bounds
    if C2 <= 0:
        raise ValueError("C2 must be positive")
    norms, firsts = [], []
    for n in times:
        y = np.asarray(shift_power(spec, x, n), dtype=complex if spec.complex_field else float)
        norms.append(float(np.sum(np.abs(y) ** p) ** (1 / p)))
        firsts.append(float(abs(y[0])) if y.size else 0.0)
    counts = np.arange(1, len(times) + 1)
    density = float(np.max(counts / (np.asarray(times) + 1.0)))
    ev = {"sup_norm": max(norms), "inf_first_coordinate": min(firsts), "upper_density": density,
          "C1": C1, "C2": C2, "times": len(times)}
    failed = [name for name, ok in (("bounded", max(norms) <= C1), ("first_coordinate", min(firsts) >= C2),
                                    ("density", density > 0)) if not ok]
    if failed:
        return Verdict(Status.REFUTED, "bounded_orbit_certificate", "summable_inverse_products",
                       {**ev, "failed": failed, "contradiction": False})
    summ = summability(spec, p, horizon, config)
    ev["summability"] = summ.to_dict()
    if summ.status == CONVERGES:
        return Verdict(Status.ESTABLISHED, "bounded_orbit_certificate", "summable_inverse_products", ev)
    if summ.status == DIVERGES:
        return Verdict(Status.REFUTED, "bounded_orbit_certificate", "summable_inverse_products",
                       {**ev, "failed": [], "contradiction": True})
    return Verdict(Status.UNDECIDED, "bounded_orbit_certificate", "summable_inverse_products",
                   {**ev, "horizon": summ.horizon})
