"""Orbits of weighted backward shifts and the statistics built on them.

``(B_w^n x)_j = w_{j+1} ... w_{j+n} x_{j+n}``. For points sampled from an
invariant product measure ``x_k = xi_k / (w_1...w_k)`` the orbit has the
closed "innovation" form ``(B_w^n x)_j = xi_{n+j} / (w_1...w_j)``, which is
what the Monte Carlo routines use: no coordinate ever under- or overflows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NoWitnessFound
from .measures import InvariantProductMeasure, sample_innovations
from .series import CONVERGES, certify_limit, record_drift
from .verdict import DEFAULT, Status, Tolerances, Verdict
from .weights import FixedPoint, WeightSpec, _real_phases, log_products

_DIRECT_STEPS = 64


def _phases(spec: WeightSpec, N: int) -> np.ndarray:
    """Arguments of ``w_1...w_n`` for n = 0..N (real specs: 0 or pi)."""
    if spec.complex_field:
        return log_products(spec, N).phases
    return _real_phases(spec, N)


def shift_power(spec: WeightSpec, x: Sequence, n: int) -> list | np.ndarray:
    """Apply ``B_w^n`` to a finitely supported vector.

    The result has the length of ``x``; coordinates whose source index lies
    beyond the support are 0. Fractions stay exact when the weights are
    rational. Floating inputs use direct multiplication for small powers
    and the cached log-products otherwise.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    M = len(x)
    if n == 0:
        return list(x) if isinstance(x, list) else np.array(x, copy=True)
    if M and all(isinstance(c, (Fraction, int)) for c in x) and spec.is_rational:
        w = [spec.exact_weight(k) for k in range(1, M)]
        out = [Fraction(0)] * M
        for j in range(M - n):
            prod = Fraction(1)
            for k in range(j, j + n):
                prod *= w[k]
            out[j] = prod * Fraction(x[j + n])
        return out
    arr = np.asarray(x)
    dtype = complex if (spec.complex_field or np.iscomplexobj(arr)) else float
    arr = arr.astype(dtype)
    out = np.zeros(M, dtype=dtype)
    if n >= M:
        return out
    if n <= _DIRECT_STEPS:
        w = spec.values(M - 1)
        y = arr.copy()
        for _ in range(n):
            y[:-1] = w * y[1:]
            y[-1] = 0
        return y
    lp = log_products(spec, M - 1)
    j = np.arange(M - n)
    mod = np.exp((lp.logs[j + n] - lp.logs[j]) + (lp.lo[j + n] - lp.lo[j]))
    ph = _phases(spec, M - 1)
    rot = np.exp(1j * (ph[j + n] - ph[j]))
    factor = mod * (rot if dtype is complex else rot.real)
    out[: M - n] = factor * arr[n:]
    return out


# -------------------------------------------------------------- regions


def _norms(Z: np.ndarray, p: float) -> np.ndarray:
    return np.sum(np.abs(Z) ** p, axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class Ball:
    """Closed ``l_p`` ball of radius ``radius`` around a finitely supported centre."""

    center: tuple
    radius: float
    label: str = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(self.center))

    def excludes_zero(self, p: float = 2.0) -> bool:
        return float(_norms(np.asarray(self.center), p)) > self.radius

    def contains(self, Z: np.ndarray, p: float = 2.0, tail: float = 0.0) -> np.ndarray:
        Z = np.atleast_2d(Z)
        c = np.asarray(self.center, dtype=Z.dtype if np.iscomplexobj(Z) else complex)
        width = max(Z.shape[1], c.size)
        Zp = np.zeros((Z.shape[0], width), dtype=complex)
        Zp[:, : Z.shape[1]] = Z
        cp = np.zeros(width, dtype=complex)
        cp[: c.size] = c
        return _norms(Zp - cp, p) + tail <= self.radius


@dataclass(frozen=True)
class Halfspace:
    """``{z : |z_0| > gamma}``."""

    gamma: float
    label: str = "halfspace"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def excludes_zero(self, p: float = 2.0) -> bool:
        return True

    def contains(self, Z: np.ndarray, p: float = 2.0, tail: float = 0.0) -> np.ndarray:
        return np.abs(np.atleast_2d(Z)[:, 0]) > self.gamma


@dataclass(frozen=True)
class CoordinateBand:
    """``{z : ||z||_p <= bound and |z_0| >= gamma}``, a closed set away from 0."""

    bound: float
    gamma: float
    label: str = "band"

    def __post_init__(self):
        if not (self.gamma > 0 and self.bound >= self.gamma):
            raise ValueError("need 0 < gamma <= bound")

    def excludes_zero(self, p: float = 2.0) -> bool:
        return True

    def contains(self, Z: np.ndarray, p: float = 2.0, tail: float = 0.0) -> np.ndarray:
        Z = np.atleast_2d(Z)
        return (_norms(Z, p) + tail <= self.bound) & (np.abs(Z[:, 0]) >= self.gamma)


def region_from_json(obj: dict):
    kind = obj.get("kind")
    if kind == "ball":
        center = [complex(c["re"], c["im"]) if isinstance(c, dict) else float(c) for c in obj["center"]]
        return Ball(tuple(center), float(obj["radius"]), obj.get("label", "ball"))
    if kind == "halfspace":
        return Halfspace(float(obj["gamma"]), obj.get("label", "halfspace"))
    if kind == "band":
        return CoordinateBand(float(obj["bound"]), float(obj["gamma"]), obj.get("label", "band"))
    raise ValueError(f"unknown region kind {kind!r}")


# ------------------------------------------------------ visit frequencies


def _dyadic_prefixes(horizon: int) -> list[int]:
    lo = max(1, horizon // 64)
    ends, N = [], 1
    while N <= horizon:
        if N >= lo:
            ends.append(N)
        N *= 2
    if not ends or ends[-1] != horizon:
        ends.append(horizon)
    return ends


def _densities(hits: np.ndarray, horizon: int) -> tuple[float, float]:
    counts = np.cumsum(hits)
    dens = [counts[N] / (N + 1) for N in _dyadic_prefixes(horizon)]
    return float(min(dens)), float(max(dens))


@dataclass
class OrbitTrace:
    """Orbit statistics ``(n, log ||B^n x||, |(B^n x)_0|)`` and hit times per region."""

    entries: list = field(default_factory=list)
    visit_sets: dict = field(default_factory=dict)
    horizon: int = 0

    def to_csv(self, path) -> None:
        labels = sorted(self.visit_sets)
        sets = {k: set(v) for k, v in self.visit_sets.items()}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "log_norm", "coord0_abs", *[f"hit_{k}" for k in labels]])
            for n, lognorm, c0 in self.entries:
                w.writerow([n, repr(lognorm), repr(c0), *[int(n in sets[k]) for k in labels]])


def orbit_trace(spec: WeightSpec, x, regions: dict, horizon: int, p: float = 2.0) -> OrbitTrace:
    """Iterate ``B_w`` on a finitely supported vector and record region visits.

    A :class:`~shiftlab.weights.FixedPoint` stands for the full fixed vector:
    its orbit is constant and the norm of the discarded tail is added to
    every distance before a hit is counted.
    """
    if isinstance(x, FixedPoint):
        return _stationary_trace(x, regions, horizon, p)
    y = np.asarray([complex(c) for c in x] if spec.complex_field else [float(c) for c in x])
    M = y.size
    w = spec.values(max(M - 1, 1))[: max(M - 1, 0)]
    trace = OrbitTrace(horizon=horizon, visit_sets={k: [] for k in regions})
    zero_hits = {k: bool(r.contains(np.zeros((1, 1)), p)[0]) for k, r in regions.items()}
    for n in range(horizon + 1):
        if n >= M:
            # the orbit has reached 0 and stays there
            trace.entries.append((n, -math.inf, 0.0))
            for k in regions:
                if zero_hits[k]:
                    trace.visit_sets[k].append(n)
            continue
        norm = float(np.sum(np.abs(y) ** p) ** (1 / p))
        trace.entries.append((n, math.log(norm) if norm > 0 else -math.inf, float(abs(y[0]))))
        for k, r in regions.items():
            if r.contains(y[None, :], p)[0]:
                trace.visit_sets[k].append(n)
        y[:-1] = w * y[1:]
        y[-1] = 0
    return trace


def _stationary_trace(fp: FixedPoint, regions: dict, horizon: int, p: float) -> OrbitTrace:
    y = np.asarray(fp.values)
    norm = float(np.sum(np.abs(y) ** p) ** (1 / p))
    trace = OrbitTrace(horizon=horizon)
    trace.entries = [(n, math.log(norm), float(abs(y[0]))) for n in range(horizon + 1)]
    for k, r in regions.items():
        hit = bool(r.contains(y[None, :], p, tail=fp.tail_bound)[0])
        trace.visit_sets[k] = list(range(horizon + 1)) if hit else []
    return trace


def visit_density(spec: WeightSpec, x, region, horizon: int, p: float = 2.0) -> dict:
    """Hit times of ``B_w^n x`` in ``region`` and dyadic-prefix density estimates."""
    trace = orbit_trace(spec, x, {"region": region}, horizon, p)
    hits = np.zeros(horizon + 1, dtype=bool)
    hits[trace.visit_sets["region"]] = True
    lower, upper = _densities(hits, horizon)
    return {"hits": trace.visit_sets["region"], "lower_density_estimate": lower,
            "upper_density_estimate": upper, "horizon": horizon}


def _profile_length(m: InvariantProductMeasure, tol: float = 1e-12, cap: int = 4096) -> int:
    return max(1, m.default_truncation(tol, cap))


def sample_visit_density(m: InvariantProductMeasure, region, horizon: int, seed=0, coords: int | None = None) -> dict:
    """Visit density of the orbit of one point sampled from ``m``.

    Uses the innovation form, so the orbit is exact up to the coordinate
    truncation ``coords`` (default: where the expected ``l_p`` tail is below 1e-12).
    """
    J = _profile_length(m) if coords is None else int(coords)
    xi = sample_innovations(m.mu0, 1, horizon + J + 1, seed)[0]
    logs, rot = m.log_scales(J)
    scale = np.exp(logs) * rot
    windows = np.lib.stride_tricks.sliding_window_view(xi, J + 1)[: horizon + 1]
    Z = windows * scale
    hits = region.contains(Z, m.p)
    lower, upper = _densities(hits, horizon)
    return {"hits": np.flatnonzero(hits).tolist(), "lower_density_estimate": lower,
            "upper_density_estimate": upper, "horizon": horizon, "coords": J}


# --------------------------------------------------- orthogonality witness


def empirical_orthogonality_witness(u: WeightSpec, v: WeightSpec, m_u: InvariantProductMeasure,
                                    m_v: InvariantProductMeasure | None = None, region=None,
                                    mc_samples: int = 10_000, horizon: int = 200, seed=0,
                                    epsilon: float = 0.1, coords: int | None = None) -> dict:
    """Find ``n`` with ``m_u(B_u^{-n} K & B_v^{-n} K)`` empirically below ``epsilon``.

    For ``x ~ m_u`` the two orbits are, coordinatewise,
    ``(B_u^n x)_j = xi_{n+j} / (u_1...u_j)`` and
    ``(B_v^n x)_j = xi_{n+j} (v_{j+1}...v_{j+n}) / (u_1...u_{n+j})``.
    Truncating coordinates can only enlarge the estimated joint frequency,
    so a returned ``n_star`` is conservative.

    Raises
    ------
    NoWitnessFound
        If no ``n <= horizon`` has estimate plus three standard errors below ``epsilon``.
    """
    if m_u.spec != u:
        raise ValueError("m_u must be built on u")
    if m_v is not None and m_v.spec != v:
        raise ValueError("m_v must be built on v")
    region = region or CoordinateBand(10.0, 0.05)
    p = m_u.p
    if not region.excludes_zero(p):
        raise ValueError("the region must stay away from 0")
    J = _profile_length(m_u) if coords is None else int(coords)
    T = horizon + J
    lu = log_products(u, T)
    lv = log_products(v, T)
    Lu = lu.logs + lu.lo
    Lv = lv.logs + lv.lo
    R = lu.minus(lv)
    pu, pv = _phases(u, T), _phases(v, T)
    complex_out = u.complex_field or v.complex_field or m_u.mu0.field_dim == 2
    xi = sample_innovations(m_u.mu0, mc_samples, T + 1, seed)
    j = np.arange(J + 1)
    scale_u = np.exp(-Lu[j]) * np.exp(-1j * pu[j])
    if not complex_out:
        scale_u = scale_u.real
    estimates = []
    for n in range(horizon + 1):
        block = xi[:, n: n + J + 1]
        with np.errstate(over="ignore"):
            mod_v = np.exp(-Lv[j] - R[n + j])
        scale_v = mod_v * np.exp(1j * (pv[n + j] - pv[j] - pu[n + j]))
        if not complex_out:
            scale_v = scale_v.real
        with np.errstate(over="ignore", invalid="ignore"):
            zu = block * scale_u
            zv = block * scale_v
            both = region.contains(zu, p) & region.contains(np.nan_to_num(zv, nan=np.inf), p)
        q = float(both.mean())
        se = math.sqrt(q * (1 - q) / mc_samples)
        estimates.append(q)
        if q + 3 * se < epsilon:
            return {"n_star": n, "est_joint_pullback": q, "std_error": se, "epsilon": epsilon,
                    "mc_samples": mc_samples, "seed": seed, "coords": J, "estimates": estimates}
    raise NoWitnessFound(f"no n <= {horizon} with joint pullback estimate below {epsilon}")


# ---------------------------------------------------------- FHC transfer


def fhc_transfer_constant(u: WeightSpec, v: WeightSpec, horizon: int | None = None,
                          config: Tolerances = DEFAULT) -> dict:
    """Limit of ``lambda_n = |u_1...u_n| / |v_1...v_n|`` and the transfer constant.

    ``K_hat = sup_m 1/lambda_m * sup_m lambda_m`` (with ``lambda_0 = 1``) bounds
    ``|v_{k+1}...v_{k+n}| / |u_{k+1}...u_{k+n}|`` over all ``n, k``.
    """
    N = config.horizon if horizon is None else int(horizon)
    R = log_products(u, N).minus(log_products(v, N))
    thr = config.ratio_log_threshold
    sup_log, inf_log = float(R.max()), float(R.min())
    with np.errstate(over="ignore"):
        K_hat = math.exp(sup_log - inf_log) if sup_log - inf_log < 709 else math.inf
    ev = {"horizon": N, "sup_log_ratio": sup_log, "inf_log_ratio": inf_log}
    a_hat = None
    if inf_log < -thr or record_drift(R[1:], "down", config).status == "unbounded":
        converged = Verdict(Status.REFUTED, "ratio_limit", "ratio_converges_in_open_half_line",
                            {**ev, "direction": "to_zero"})
    elif sup_log > thr or record_drift(R[1:], "up", config).status == "unbounded":
        converged = Verdict(Status.REFUTED, "ratio_limit", "ratio_converges_in_open_half_line",
                            {**ev, "direction": "to_infinity"})
    else:
        cert = certify_limit(np.exp(R[1:]), config)
        ev["limit"] = cert.to_dict()
        if cert.status == CONVERGES and cert.limit is not None and cert.limit > 0:
            a_hat = cert.limit
            converged = Verdict(Status.ESTABLISHED, "ratio_limit", "ratio_converges_in_open_half_line", ev)
        else:
            converged = Verdict(Status.UNDECIDED, "ratio_limit", "ratio_converges_in_open_half_line", ev)
    return {"K_hat": K_hat, "a_hat": a_hat, "converged": converged}
