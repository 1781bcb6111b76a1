"""Three-valued verdicts and the shared tolerance configuration."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import numpy as np


class Status(str, enum.Enum):
    ESTABLISHED = "Established"
    REFUTED = "Refuted"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class Verdict:
    """Outcome of one decision rule.

    Parameters
    ----------
    status : Status
        Established or Refuted when a certified rule applied, Undecided otherwise.
    rule : str
        Name of the criterion that produced the status.
    claim : str
        The proposition being decided, e.g. ``"orthogonal"`` or ``"similar"``.
    evidence : dict
        JSON-compatible numeric payload. Always carries ``horizon`` when the
        status is Undecided.
    """

    status: Status
    rule: str
    claim: str
    evidence: dict = field(default_factory=dict)

    @property
    def established(self) -> bool:
        return self.status is Status.ESTABLISHED

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    @property
    def undecided(self) -> bool:
        return self.status is Status.UNDECIDED

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "claim": self.claim,
            "status": self.status.value,
            "evidence": jsonable(self.evidence),
        }


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used by every finite-horizon decision rule.

    Attributes
    ----------
    horizon : int
        Default number of terms inspected.
    log_divergence : float
        ``L_n`` above this value counts as divergence to infinity.
    window_fraction : float
        Trailing fraction of the horizon used for tail certificates.
    ratio_bound : float
        Largest geometric ratio accepted as a convergence certificate.
    ratio_log_threshold : float
        ``|log lambda_n|`` beyond this value counts as lambda tending to 0 or infinity.
    epochs : int
        Number of disjoint epochs in which a threshold crossing must recur.
    pseries_converge : float
        Fitted power-law decay exponent at or above which a series converges.
    pseries_diverge : float
        Fitted exponent at or below which a series diverges.
    fit_residual : float
        Largest log-domain residual accepted for a power-law fit.
    divergence_sum : float
        Partial sums above this value count as divergent when no convergence
        certificate exists.
    record_epochs : int
        Minimum number of record-setting epochs for the unbounded-drift rule.
    exact_tol : float
        Tolerance on log differences when exact arithmetic is unavailable.
    quad_abs_tol : float
        Absolute tolerance for adaptive quadrature.
    quad_limit : int
        Subinterval cap for adaptive quadrature.
    d_max, m_check : int
        Search bounds for common periodic points.
    """

    horizon: int = 100_000
    log_divergence: float = 700.0
    window_fraction: float = 0.25
    ratio_bound: float = 0.999
    ratio_log_threshold: float = 30.0
    epochs: int = 3
    pseries_converge: float = 1.1
    pseries_diverge: float = 1.02
    fit_residual: float = 0.05
    divergence_sum: float = 1e12
    record_epochs: int = 3
    exact_tol: float = 1e-12
    quad_abs_tol: float = 1e-10
    quad_limit: int = 1_000_000
    d_max: int = 64
    m_check: int = 1000

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT = Tolerances()


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars, fractions and nested containers to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _float(obj.real), "im": _float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    return obj


def _float(x) -> float | str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x
