"""One-dimensional marginals and the invariant product measures they generate.

If ``mu_0`` is a probability law on the scalar field and ``mu_n`` is its image
under ``t -> t / (w_1...w_n)``, the product ``m = mu_0 x mu_1 x ...`` is
invariant under ``B_w``. Sampling uses the equivalent description
``x = xi_0 e_0 + sum_n xi_n / (w_1...w_n) e_n`` with ``xi_n`` i.i.d. ``mu_0``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import InfiniteMoment, NoDensity, NotSummable, UnsupportedKind
from .series import CONVERGES, certify_log_terms
from .verdict import DEFAULT, Status, Tolerances, Verdict
from .weights import WeightSpec, log_products, summability, _real_phases

_CHUNK = 1024


class MarginalMeasure:
    """Interface shared by the marginal families.

    Concrete classes provide sampling, ``E|s|^p``, the two-sided tail
    ``P(|s| > t)``, pushforward under ``t -> c t``, and a decomposition into
    atoms plus a density with known breakpoints.
    """

    field_dim: int = 1

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def moment(self, p: float) -> float:
        raise NotImplementedError

    def tail(self, t) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, c) -> "MarginalMeasure":
        raise NotImplementedError

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([]), np.array([])

    def density(self, t) -> np.ndarray:
        """Density of the absolutely continuous part (real line only)."""
        raise NoDensity(f"{type(self).__name__} has no density")

    def breakpoints(self) -> list[float]:
        return []

    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def has_density(self) -> bool:
        return False

    @property
    def charges_zero(self) -> bool:
        return False

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(MarginalMeasure):
    """Centred Gaussian with variance ``sigma**2`` per real coordinate.

    With ``field_dim = 2`` this is the rotation invariant complex law, so
    ``E|xi|^2 = 2 sigma^2``.
    """

    sigma: float
    field_dim: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.field_dim not in (1, 2):
            raise ValueError("field_dim must be 1 or 2")

    def sample(self, rng, size):
        if self.field_dim == 1:
            return self.sigma * rng.standard_normal(size)
        z = rng.standard_normal((*np.atleast_1d(size), 2)) if not isinstance(size, tuple) else rng.standard_normal((*size, 2))
        return self.sigma * (z[..., 0] + 1j * z[..., 1])

    def moment(self, p):
        if self.field_dim == 1:
            return self.sigma ** p * 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)
        return self.sigma ** p * 2 ** (p / 2) * math.gamma(1 + p / 2)

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        if self.field_dim == 1:
            return special.erfc(t / (self.sigma * math.sqrt(2)))
        return np.exp(-t ** 2 / (2 * self.sigma ** 2))

    def scaled(self, c):
        return Gaussian(self.sigma * abs(c), self.field_dim)

    def scaled_log(self, log_c: float) -> "Gaussian":
        return Gaussian(self.sigma * math.exp(log_c), self.field_dim)

    def density(self, t):
        t = np.asarray(t)
        if self.field_dim == 1:
            return np.exp(-t ** 2 / (2 * self.sigma ** 2)) / (self.sigma * math.sqrt(2 * math.pi))
        return np.exp(-np.abs(t) ** 2 / (2 * self.sigma ** 2)) / (2 * math.pi * self.sigma ** 2)

    def logpdf(self, t):
        t = np.abs(np.asarray(t))
        if self.field_dim == 1:
            return -t ** 2 / (2 * self.sigma ** 2) - math.log(self.sigma * math.sqrt(2 * math.pi))
        return -t ** 2 / (2 * self.sigma ** 2) - math.log(2 * math.pi * self.sigma ** 2)

    @property
    def has_density(self):
        return True

    def to_json(self):
        return {"kind": "gaussian", "sigma": self.sigma, "field": "complex" if self.field_dim == 2 else "real"}


@dataclass(frozen=True)
class UniformInterval(MarginalMeasure):
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)

    def moment(self, p):
        def F(t):
            return math.copysign(abs(t) ** (p + 1), t) / (p + 1)
        return (F(self.b) - F(self.a)) / (self.b - self.a)

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.clip(np.minimum(t, self.b), self.a, self.b) - np.clip(np.maximum(-t, self.a), self.a, self.b)
        return 1.0 - np.clip(inside, 0, None) / (self.b - self.a)

    def scaled(self, c):
        if isinstance(c, complex):
            if c.imag != 0:
                raise UnsupportedKind("a real uniform law cannot be rotated by a complex scalar")
            c = c.real
        lo, hi = sorted((c * self.a, c * self.b))
        return UniformInterval(lo, hi)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.a) & (t <= self.b), 1.0 / (self.b - self.a), 0.0)

    def logpdf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.density(t))

    def breakpoints(self):
        return [self.a, self.b]

    def support(self):
        return (self.a, self.b)

    @property
    def has_density(self):
        return True

    def to_json(self):
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class DiscreteGroup(MarginalMeasure):
    """Finitely many atoms ``s_i`` (real or complex) with masses ``p_i > 0``."""

    support_points: tuple
    weights: tuple

    def __post_init__(self):
        pts = tuple(self.support_points)
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "support_points", pts)
        object.__setattr__(self, "weights", w)
        if len(pts) != len(w) or not pts:
            raise ValueError("support and weights must be non-empty and of equal length")
        if any(x <= 0 for x in w):
            raise ValueError("discrete weights must be strictly positive")
        if abs(sum(w) - 1) > 1e-10:
            raise ValueError("discrete weights must sum to 1")

    @property
    def field_dim(self):
        return 2 if any(isinstance(s, complex) and s.imag != 0 for s in self.support_points) else 1

    def _pts(self):
        return np.array(self.support_points, dtype=complex if self.field_dim == 2 else float)

    def sample(self, rng, size):
        idx = rng.choice(len(self.weights), size=size, p=np.array(self.weights))
        return self._pts()[idx]

    def moment(self, p):
        return float(np.sum(np.abs(self._pts()) ** p * np.array(self.weights)))

    def tail(self, t):
        """``P(|s| > t)``; atoms within relative 1e-12 of ``t`` count as ties."""
        t = np.asarray(t, dtype=float)
        mods = np.abs(self._pts())
        w = np.array(self.weights)
        above = mods[None, :] > t.reshape(-1, 1) * (1 + 1e-12)
        return np.sum(w[None, :] * above, axis=1).reshape(t.shape)

    def scaled(self, c):
        pts = self._pts() * c
        if pts.dtype.kind == "c" and np.all(pts.imag == 0):
            pts = pts.real
        return DiscreteGroup(tuple(pts.tolist()), self.weights)

    def atoms(self):
        return self._pts(), np.array(self.weights)

    @property
    def charges_zero(self):
        return any(s == 0 for s in self.support_points)

    def to_json(self):
        pts = [p if not isinstance(p, complex) else {"re": p.real, "im": p.imag} for p in self.support_points]
        return {"kind": "discrete", "support": pts, "weights": list(self.weights)}


@dataclass(frozen=True)
class GridDensity(MarginalMeasure):
    """Piecewise linear density through ``(grid[i], values[i])``, zero outside.

    A repeated grid node encodes a jump: the first copy carries the left
    limit, the second the right limit. The endpoints are jumps from 0
    whenever their values are non-zero.
    """

    grid: tuple
    values: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must have equal length >= 2")
        if np.any(np.diff(g) < 0) or g[-1] <= g[0]:
            raise ValueError("grid must be non-decreasing with positive length")
        if np.any(v < 0):
            raise ValueError("density values must be non-negative")
        if any(g[i] == g[i + 1] == g[i + 2] for i in range(g.size - 2)):
            raise ValueError("a node may be repeated at most twice")
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        if abs(self.mass() - 1) > 1e-10:
            raise ValueError(f"density must integrate to 1, got {self.mass()!r}")

    @classmethod
    def normalized(cls, grid, values) -> "GridDensity":
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        m = float(np.sum(np.diff(g) * (v[1:] + v[:-1]) / 2))
        return cls(tuple(g), tuple(v / m))

    @classmethod
    def uniform_partition(cls, lo: float, hi: float, values) -> "GridDensity":
        v = np.asarray(values, dtype=float)
        return cls.normalized(np.linspace(lo, hi, v.size), v)

    def _arrays(self):
        return np.asarray(self.grid), np.asarray(self.values)

    def mass(self) -> float:
        g, v = self._arrays()
        return float(np.sum(np.diff(g) * (v[1:] + v[:-1]) / 2))

    def _eval(self, t, side):
        g, v = self._arrays()
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(g, t, side=side) - (1 if side == "right" else 0)
        out = np.zeros(t.shape)
        if side == "right":
            ok = (i >= 0) & (i < g.size - 1)
            ii = np.clip(i, 0, g.size - 2)
        else:
            ok = (i >= 1) & (i <= g.size - 1)
            ii = np.clip(i - 1, 0, g.size - 2)
        h = g[ii + 1] - g[ii]
        frac = np.where(h > 0, (t - g[ii]) / np.where(h > 0, h, 1), 0.0)
        val = v[ii] + frac * (v[ii + 1] - v[ii])
        return np.where(ok, val, 0.0)

    def density(self, t):
        return self._eval(t, "right")

    def left_limit(self, t):
        return self._eval(t, "left")

    def logpdf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.density(t))

    def cdf(self, t):
        g, v = self._arrays()
        t = np.asarray(t, dtype=float)
        seg = np.diff(g) * (v[1:] + v[:-1]) / 2
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        i = np.clip(np.searchsorted(g, t, side="right") - 1, 0, g.size - 2)
        h = g[i + 1] - g[i]
        x = np.clip(t - g[i], 0, h)
        slope = np.where(h > 0, (v[i + 1] - v[i]) / np.where(h > 0, h, 1), 0.0)
        part = v[i] * x + slope * x ** 2 / 2
        out = cum[i] + part
        return np.where(t < g[0], 0.0, np.where(t >= g[-1], 1.0, out))

    def sample(self, rng, size):
        g, v = self._arrays()
        seg = np.diff(g) * (v[1:] + v[:-1]) / 2
        k = rng.choice(seg.size, size=size, p=seg / seg.sum())
        u = rng.uniform(size=size)
        h = g[k + 1] - g[k]
        v0, v1 = v[k], v[k + 1]
        # invert v0 x + (v1 - v0) x^2 / (2h) = u * seg
        target = u * seg[k]
        a = (v1 - v0) / (2 * h)
        disc = np.sqrt(np.maximum(v0 ** 2 + 4 * a * target, 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(np.abs(a) * h > 1e-12 * np.maximum(v0, 1e-300),
                         2 * target / (v0 + disc), target / np.where(v0 > 0, v0, 1))
        return g[k] + np.clip(x, 0, h)

    def moment(self, p):
        total = 0.0
        pts = sorted(set(self.grid) | ({0.0} if self.grid[0] < 0 < self.grid[-1] else set()))
        for lo, hi in zip(pts, pts[1:]):
            val, _ = integrate.quad(lambda t: abs(t) ** p * float(self.density(t)), lo, hi, epsabs=1e-13, limit=200)
            total += val
        if not math.isfinite(total):
            raise InfiniteMoment("moment is infinite")
        return total

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 - (self.cdf(t) - self.cdf(-t))

    def scaled(self, c):
        if isinstance(c, complex):
            if c.imag != 0:
                raise UnsupportedKind("a real grid density cannot be rotated by a complex scalar")
            c = c.real
        g, v = self._arrays()
        g = g * c
        v = v / abs(c)
        if c < 0:
            g, v = g[::-1], v[::-1]
        return GridDensity(tuple(g), tuple(v))

    def breakpoints(self):
        return sorted(set(self.grid))

    def support(self):
        return (self.grid[0], self.grid[-1])

    def discontinuities(self) -> list[tuple[float, float, float]]:
        """Jump points as ``(u, left_limit, right_limit)``."""
        g, v = self._arrays()
        out = []
        if v[0] != 0:
            out.append((g[0], 0.0, v[0]))
        for i in range(g.size - 1):
            if g[i] == g[i + 1] and v[i] != v[i + 1]:
                out.append((g[i], v[i], v[i + 1]))
        if v[-1] != 0:
            out.append((g[-1], v[-1], 0.0))
        return out

    @property
    def has_density(self):
        return True

    def to_json(self):
        return {"kind": "grid", "grid": list(self.grid), "values": list(self.values)}


@dataclass(frozen=True)
class Mixture(MarginalMeasure):
    """Convex combination of marginals, e.g. atoms plus a density."""

    parts: tuple  # of (weight, MarginalMeasure)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple((float(w), m) for w, m in self.parts))
        if any(w <= 0 for w, _ in self.parts) or abs(sum(w for w, _ in self.parts) - 1) > 1e-10:
            raise ValueError("mixture weights must be positive and sum to 1")

    @property
    def field_dim(self):
        return max(m.field_dim for _, m in self.parts)

    def sample(self, rng, size):
        w = np.array([w for w, _ in self.parts])
        k = rng.choice(w.size, size=size, p=w)
        out = np.zeros(np.shape(k), dtype=complex if self.field_dim == 2 else float)
        for i, (_, m) in enumerate(self.parts):
            draws = m.sample(rng, size)
            out = np.where(k == i, draws, out)
        return out

    def moment(self, p):
        return sum(w * m.moment(p) for w, m in self.parts)

    def tail(self, t):
        return sum(w * m.tail(t) for w, m in self.parts)

    def scaled(self, c):
        return Mixture(tuple((w, m.scaled(c)) for w, m in self.parts))

    def atoms(self):
        pts, mass = [], []
        for w, m in self.parts:
            a, b = m.atoms()
            pts.append(a)
            mass.append(w * b)
        return np.concatenate(pts), np.concatenate(mass)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        return sum(w * m.density(t) for w, m in self.parts if m.has_density)

    def breakpoints(self):
        return sorted({b for _, m in self.parts for b in m.breakpoints()})

    def support(self):
        sups = [m.support() for _, m in self.parts if m.has_density]
        return (min(s[0] for s in sups), max(s[1] for s in sups)) if sups else (0.0, 0.0)

    @property
    def has_density(self):
        return any(m.has_density for _, m in self.parts)

    @property
    def charges_zero(self):
        return any(m.charges_zero for _, m in self.parts)

    def to_json(self):
        return {"kind": "mixture", "parts": [{"weight": w, "measure": m.to_json()} for w, m in self.parts]}


@dataclass(frozen=True)
class RotationInvariant(MarginalMeasure):
    """Law of ``omega * xi`` with ``omega`` uniform on the unit circle, ``xi ~ base``."""

    base: MarginalMeasure
    field_dim: int = 2

    def sample(self, rng, size):
        theta = rng.uniform(0, 2 * math.pi, size)
        return self.base.sample(rng, size) * np.exp(1j * theta)

    def moment(self, p):
        return self.base.moment(p)

    def tail(self, t):
        return self.base.tail(t)

    def scaled(self, c):
        return RotationInvariant(self.base.scaled(abs(c)))

    def to_json(self):
        return {"kind": "rotation_invariant", "base": self.base.to_json()}


def marginal_from_json(obj: dict) -> MarginalMeasure:
    kind = obj.get("kind")
    if kind == "gaussian":
        return Gaussian(float(obj["sigma"]), 2 if obj.get("field", "real") == "complex" else 1)
    if kind == "uniform":
        return UniformInterval(float(obj["a"]), float(obj["b"]))
    if kind == "discrete":
        pts = [complex(p["re"], p["im"]) if isinstance(p, dict) else float(p) for p in obj["support"]]
        return DiscreteGroup(tuple(pts), tuple(obj["weights"]))
    if kind == "grid":
        if "grid" in obj:
            return GridDensity.normalized(obj["grid"], obj["values"]) if obj.get("normalize") else \
                GridDensity(tuple(obj["grid"]), tuple(obj["values"]))
        return GridDensity.uniform_partition(float(obj["lo"]), float(obj["hi"]), obj["values"])
    if kind == "mixture":
        return Mixture(tuple((p["weight"], marginal_from_json(p["measure"])) for p in obj["parts"]))
    if kind == "rotation_invariant":
        return RotationInvariant(marginal_from_json(obj["base"]))
    raise ValueError(f"unknown marginal kind {kind!r}")


# ------------------------------------------------------ product measures


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SHIFTLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class InvariantProductMeasure:
    """Product of the pushforwards of ``mu0`` under ``t -> t / (w_1...w_n)``."""

    mu0: MarginalMeasure
    spec: WeightSpec
    p: float = 2.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def log_scales(self, N: int):
        """``(-L_n, phase factor of 1/(w_1...w_n))`` for n = 0..N."""
        key = ("scales", N)
        if key not in self._cache:
            lp = log_products(self.spec, N)
            if self.spec.complex_field:
                rot = np.exp(-1j * lp.phases)
            else:
                rot = np.cos(_real_phases(self.spec, N))
            self._cache.clear()
            self._cache[key] = (-(lp.logs + lp.lo), rot)
        return self._cache[key]

    def marginal_at(self, n: int) -> MarginalMeasure:
        return marginal_at(self, n)

    def default_truncation(self, tol: float = 1e-12, horizon: int = 4096) -> int:
        """First N with ``sum_{n>N} |w_1...w_n|^-p < tol``, capped at ``horizon``."""
        logs, _ = self.log_scales(horizon)
        terms = np.exp(self.p * logs[1:])
        tails = np.cumsum(terms[::-1])[::-1]
        below = np.flatnonzero(tails < tol)
        return int(below[0]) if below.size else horizon


def marginal_at(m: InvariantProductMeasure, n: int) -> MarginalMeasure:
    """``mu_n``, the image of ``mu_0`` under ``t -> t / (w_1...w_n)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return m.mu0
    logs, rot = m.log_scales(n)
    if isinstance(m.mu0, Gaussian):
        return m.mu0.scaled_log(float(logs[n]))
    c = math.exp(float(logs[n])) * rot[n]
    if isinstance(c, complex) or np.iscomplexobj(c):
        c = complex(c)
        if abs(c.imag) < 1e-15 * abs(c):
            c = c.real
    else:
        c = float(c)
    return m.mu0.scaled(c)


def moment_identity(m: InvariantProductMeasure, horizon: int | None = None,
                    config: Tolerances = DEFAULT) -> dict:
    """Both sides of ``int sum |t_n|^p dm = E|s|^p (1 + S_p)``.

    ``lhs_truncated`` keeps the terms n <= horizon, ``rhs_closed`` uses the
    certified limit of ``S_p``, and ``tail_bound`` bounds their difference.
    """
    summ = summability(m.spec, m.p, horizon, config)
    if summ.status != CONVERGES or summ.limit is None:
        raise NotSummable(f"S_p not certified convergent ({summ.tail_rule})")
    M = m.mu0.moment(m.p)
    if not math.isfinite(M):
        raise InfiniteMoment("E|s|^p is infinite")
    return {"moment": M, "partial_sum": summ.partial_sum, "limit": summ.limit,
            "lhs_truncated": M * (1 + summ.partial_sum), "rhs_closed": M * (1 + summ.limit),
            "tail_bound": M * (summ.tail_bound or 0.0), "horizon": summ.horizon}


def _draw_chunk(mu0, seed_seq, rows, cols):
    rng = np.random.default_rng(seed_seq)
    return mu0.sample(rng, (rows, cols))


def sample_innovations(mu0: MarginalMeasure, rows: int, cols: int, seed, threads: int | None = None) -> np.ndarray:
    """``rows x cols`` i.i.d. draws of ``mu0``.

    Rows are generated in fixed-size chunks with independent child streams
    of ``seed``, so the output does not depend on the number of threads.
    """
    n_chunks = max(1, math.ceil(rows / _CHUNK))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_chunks)
    sizes = [min(_CHUNK, rows - i * _CHUNK) for i in range(n_chunks)]
    workers = threads or _threads()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _draw_chunk(mu0, *a, cols), zip(children, sizes)))
    else:
        parts = [_draw_chunk(mu0, c, s, cols) for c, s in zip(children, sizes)]
    return np.concatenate(parts, axis=0)


def sample(m: InvariantProductMeasure, N: int | None = None, seed=0, size: int | None = None,
           threads: int | None = None, check: bool = True, config: Tolerances = DEFAULT) -> np.ndarray:
    """Draw truncations ``(x_0, ..., x_N)`` of points distributed by ``m``.

    Returns a vector when ``size`` is None, otherwise a ``size x (N+1)`` array.
    """
    if check:
        summ = summability(m.spec, m.p, None, config)
        if summ.status != CONVERGES:
            raise NotSummable(f"S_p not certified convergent ({summ.tail_rule})")
    if N is None:
        N = m.default_truncation()
    rows = 1 if size is None else int(size)
    xi = sample_innovations(m.mu0, rows, N + 1, seed, threads)
    logs, rot = m.log_scales(N)
    x = xi * (np.exp(logs) * rot)
    if not m.spec.complex_field and m.mu0.field_dim == 1:
        x = x.real
    return x[0] if size is None else x


def symmetrize_phase(mu0: MarginalMeasure, field: str = "real") -> MarginalMeasure:
    """Law of ``omega * xi`` with ``omega`` uniform on the unimodular scalars."""
    if isinstance(mu0, Gaussian):
        return mu0
    if field == "complex":
        return RotationInvariant(mu0)
    if mu0.field_dim == 2:
        raise UnsupportedKind("complex-valued marginal cannot be sign-symmetrised on the real line")
    if isinstance(mu0, DiscreteGroup):
        merged: dict[float, float] = {}
        for s, w in zip(mu0.support_points, mu0.weights):
            for t in (s, -s):
                merged[float(t)] = merged.get(float(t), 0.0) + w / 2
        pts = sorted(merged)
        return DiscreteGroup(tuple(pts), tuple(merged[p] for p in pts))
    if isinstance(mu0, UniformInterval):
        v = 1.0 / (mu0.b - mu0.a)
        g = GridDensity((mu0.a, mu0.a, mu0.b, mu0.b), (0.0, v, v, 0.0))
        return _even_part(g)
    if isinstance(mu0, GridDensity):
        return _even_part(mu0)
    if isinstance(mu0, Mixture):
        return Mixture(tuple((w, symmetrize_phase(m, field)) for w, m in mu0.parts))
    raise UnsupportedKind(f"cannot symmetrise {type(mu0).__name__}")


def _even_part(g: GridDensity) -> GridDensity:
    """``(p(t) + p(-t)) / 2`` as an exact piecewise linear density."""
    nodes = sorted(set(g.grid) | {-x for x in g.grid})

    def left(t):
        return 0.5 * (float(g.left_limit(t)) + float(g.density(-t)))

    def right(t):
        return 0.5 * (float(g.density(t)) + float(g.left_limit(-t)))

    grid, vals = [], []
    for i, t in enumerate(nodes):
        lv, rv = left(t), right(t)
        if i == 0:
            grid.append(t)
            vals.append(rv)
        elif i == len(nodes) - 1:
            grid.append(t)
            vals.append(lv)
        elif lv == rv:
            grid.append(t)
            vals.append(lv)
        else:
            grid += [t, t]
            vals += [lv, rv]
    return GridDensity.normalized(grid, vals)


def _as_sequence(epsilons, N: int) -> np.ndarray:
    if hasattr(epsilons, "array"):
        return np.asarray(epsilons.array(N), dtype=float)[1:]
    if callable(epsilons):
        return np.array([float(epsilons(n)) for n in range(1, N + 1)])
    arr = np.asarray(epsilons, dtype=float)
    return arr[:N]


def ell1_support_test(mu0: MarginalMeasure, spec: WeightSpec, epsilons, horizon: int | None = None,
                      config: Tolerances = DEFAULT) -> Verdict:
    """Sufficient condition for ``m(l_1) = 1``.

    If ``sum eps_n < infinity`` and ``sum_n mu0(|t| > |w_1...w_n| eps_n) < infinity``
    then almost every sample is absolutely summable.
    """
    N = config.horizon if horizon is None else int(horizon)
    eps = _as_sequence(epsilons, N)
    N = eps.size
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    eps_cert = certify_log_terms(np.log(eps), tol=config)
    ev = {"horizon": N, "epsilon_series": eps_cert.to_dict()}
    if eps_cert.status != CONVERGES:
        return Verdict(Status.UNDECIDED, "tail_probability_series", "ell1_support", ev)
    lp = log_products(spec, N)
    log_thr = lp.logs[1:] + np.log(eps)
    with np.errstate(over="ignore"):
        thr = np.exp(np.minimum(log_thr, 709.0))
    thr = np.where(log_thr > 709.0, np.inf, thr)
    terms = np.asarray(mu0.tail(thr), dtype=float)
    with np.errstate(divide="ignore"):
        cert = certify_log_terms(np.log(np.clip(terms, 0, None)), tol=config)
    ev["tail_series"] = cert.to_dict()
    status = Status.ESTABLISHED if cert.status == CONVERGES else Status.UNDECIDED
    return Verdict(status, "tail_probability_series", "ell1_support", ev)


def c0_null_test(mu0: MarginalMeasure, spec: WeightSpec, horizon: int | None = None,
                 config: Tolerances = DEFAULT) -> Verdict:
    """``m(c_0) = 0`` when the products do not tend to infinity and ``mu0`` is not a point mass at 0."""
    from .weights import classify

    mixing = classify(spec, 2.0, horizon, config)["mixing"]
    degenerate = isinstance(mu0, DiscreteGroup) and all(s == 0 for s in mu0.support_points)
    ev = {"mixing": mixing.status.value, "degenerate_marginal": degenerate, "horizon": mixing.evidence.get("horizon")}
    if mixing.refuted and not degenerate:
        return Verdict(Status.ESTABLISHED, "products_not_to_infinity", "c0_null", ev)
    return Verdict(Status.UNDECIDED, "products_not_to_infinity", "c0_null", ev)
