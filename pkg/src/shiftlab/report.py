"""Experiment configurations and the JSON/CSV reports behind the command line.

A configuration is a JSON object naming one or two weight specs plus
optional horizons, marginals, a density profile, module toggles and seeds.
Every runner returns ``(report, exit_code)`` and writes its files under an
output directory; reports are serialised with sorted keys so identical
inputs give byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .autocorr import DensityProfile, acf_curve, log_substitution, theta_curve, write_curve_csv
from .errors import ConfigError, NoWitnessFound, NotSummable, ShiftlabError
from .hellinger import kakutani_decide
from .measures import Gaussian, InvariantProductMeasure, marginal_from_json, sample
from .orbits import empirical_orthogonality_witness
from .orthocheck import orthogonality_report
from .verdict import Status, Tolerances, jsonable
from .weights import WeightSpec, classify, spec_from_json

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED = 0, 1, 2

COMPARE_MODULES = ("similarity", "window", "periodic", "gaussian", "kakutani", "witness")
CURVE_MODULES = ("acf", "theta", "hellinger")

_SPEC = {"type": "object", "required": ["kind"],
         "properties": {"kind": {"enum": ["constant", "scaled", "prefix", "sparse", "ratio"]}}}
_MEASURE = {"type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": ["gaussian", "uniform", "discrete", "grid", "mixture", "rotation"]}}}
_POS_INT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["u"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "u": _SPEC,
        "v": _SPEC,
        "p": {"type": "number", "exclusiveMinimum": 0},
        "horizon": _POS_INT,
        "horizons": {"type": "object", "additionalProperties": _POS_INT,
                     "propertyNames": {"enum": ["gaussian", "kakutani", "witness", "hellinger", "window"]}},
        "modules": {"type": "array", "uniqueItems": True,
                    "items": {"enum": list(COMPARE_MODULES) + list(CURVE_MODULES)}},
        "marginals": {"type": "object", "additionalProperties": False,
                      "properties": {"u": _MEASURE, "v": _MEASURE}},
        "profile": {"type": "object", "required": ["kind"]},
        "seed": {"type": "integer", "minimum": 0},
        "mc_samples": _POS_INT,
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "window": _POS_INT,
        "curves": {"type": "object", "additionalProperties": False,
                   "properties": {"alphas": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                                  "lambdas": {"type": "array", "minItems": 1,
                                              "items": {"type": "number", "exclusiveMinimum": 0}}}},
        "sample": {"type": "object", "additionalProperties": False,
                   "properties": {"size": _POS_INT, "coords": _POS_INT}},
        "tolerances": {"type": "object"},
    },
}


@dataclass
class ExperimentConfig:
    """Validated configuration; ``raw`` keeps the JSON object as given."""

    u: WeightSpec
    v: WeightSpec | None
    raw: dict
    p: float = 2.0
    horizon: int = 100_000
    horizons: dict = field(default_factory=dict)
    modules: tuple | None = None
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def name(self) -> str | None:
        return self.raw.get("name")

    def horizon_for(self, key: str, default: int | None = None) -> int:
        return int(self.horizons.get(key, default if default is not None else self.horizon))

    def marginal(self, side: str):
        m = self.raw.get("marginals", {}).get(side)
        return Gaussian(1.0) if m is None else marginal_from_json(m)


def bundled_examples() -> dict[str, dict]:
    """Bundled example configurations keyed by name."""
    out = {}
    for entry in resources.files("shiftlab").joinpath("examples").iterdir():
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = json.loads(entry.read_text())
    return dict(sorted(out.items()))


def _pair_key(raw: dict) -> tuple | None:
    try:
        u = spec_from_json(raw["u"]).key()
        v = spec_from_json(raw["v"]).key() if "v" in raw else None
    except (KeyError, ValueError, TypeError):
        return None
    return u, v


def match_example(cfg: ExperimentConfig) -> str | None:
    """Name of the bundled example with the same weight pair, if any."""
    key = (cfg.u.key(), cfg.v.key() if cfg.v is not None else None)
    for name, raw in bundled_examples().items():
        if _pair_key(raw) == key:
            return name
    return None


def parse_config(raw, horizon: int | None = None, seed: int | None = None) -> ExperimentConfig:
    """Validate a JSON object and build the configuration.

    Raises
    ------
    ConfigError
        On schema violations or unreadable weight specs, marginals or tolerances.
    """
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from None
    try:
        u = spec_from_json(raw["u"])
        v = spec_from_json(raw["v"]) if "v" in raw else None
        for m in raw.get("marginals", {}).values():
            marginal_from_json(m)
        if "profile" in raw:
            DensityProfile.from_json(raw["profile"])
    except (ValueError, KeyError, TypeError, ShiftlabError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    N = int(horizon if horizon is not None else raw.get("horizon", 100_000))
    if N < 1:
        raise ConfigError("horizon must be >= 1")
    try:
        tol = Tolerances(**{**raw.get("tolerances", {}), "horizon": N})
    except TypeError as exc:
        raise ConfigError(f"invalid tolerances: {exc}") from None
    mods = raw.get("modules")
    return ExperimentConfig(u, v, raw, float(raw.get("p", 2.0)), N, dict(raw.get("horizons", {})),
                            tuple(mods) if mods is not None else None,
                            int(seed if seed is not None else raw.get("seed", 0)), tol)


def load_config(path, horizon: int | None = None, seed: int | None = None) -> ExperimentConfig:
    """Read a configuration file, or a bundled example given by name."""
    p = Path(path)
    if p.exists():
        try:
            raw = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    else:
        examples = bundled_examples()
        if str(path) not in examples:
            raise ConfigError(f"no such config file or bundled example: {path}")
        raw = examples[str(path)]
    return parse_config(raw, horizon, seed)


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def _write(out_dir, name: str, text: str) -> Path:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / name
    path.write_text(text)
    return path


def _header(cfg: ExperimentConfig) -> dict:
    out = {"name": cfg.name, "p": cfg.p, "horizon": cfg.horizon, "seed": cfg.seed,
           "u": cfg.u.to_json(), "v": cfg.v.to_json() if cfg.v is not None else None}
    ex = match_example(cfg)
    if ex is not None:
        out["example"] = ex
    return out


def _all_undecided(statuses) -> bool:
    statuses = list(statuses)
    return bool(statuses) and all(s == Status.UNDECIDED.value for s in statuses)


# ------------------------------------------------------------------ runners


def run_classify(cfg: ExperimentConfig, out_dir=None) -> tuple[dict, int]:
    """Classify ``u`` (and ``v`` when given); writes ``classify.json``."""
    report = _header(cfg)
    statuses = []
    results = {}
    for side, spec in (("u", cfg.u), ("v", cfg.v)):
        if spec is None:
            continue
        verdicts = classify(spec, cfg.p, cfg.horizon, cfg.tolerances)
        results[side] = {k: v.to_dict() for k, v in verdicts.items()}
        statuses += [v.status.value for v in verdicts.values()]
    report["classification"] = results
    if out_dir is not None:
        _write(out_dir, "classify.json", dump_json(report))
    return report, EXIT_UNDECIDED if _all_undecided(statuses) else EXIT_OK


def _require_pair(cfg: ExperimentConfig) -> WeightSpec:
    if cfg.v is None:
        raise ConfigError("this command needs both 'u' and 'v'")
    return cfg.v


def run_compare(cfg: ExperimentConfig, out_dir=None) -> tuple[dict, int]:
    """Consolidated orthogonality report; writes ``compare.json``.

    ``InternalInconsistency`` from the orthogonality rules propagates unchanged.
    """
    v = _require_pair(cfg)
    u = cfg.u
    mods = set(cfg.modules if cfg.modules is not None else COMPARE_MODULES) & set(COMPARE_MODULES)
    report = _header(cfg)
    sections = {}
    statuses = []
    if mods & {"similarity", "window", "periodic", "gaussian"}:
        rep = orthogonality_report(u, v, cfg.p, cfg.tolerances, cfg.horizon, int(cfg.raw.get("window", 8)),
                                   cfg.horizon_for("gaussian"))
        report["summary"] = rep.summary
        by_rule = {x.rule: x for x in rep.verdicts}
        sim = rep.verdicts[0]
        chosen = {"similarity": [sim],
                  "window": [x for x in rep.verdicts if x.rule in ("window_criterion", "bounded_below_not_similar",
                                                                 "scalar_pair_modulus")],
                  "periodic": [by_rule["shared_periodic_point"]],
                  "gaussian": [by_rule["gaussian_equivalence"]]}
        for key in ("similarity", "window", "periodic", "gaussian"):
            if key in mods:
                sections[key] = [x.to_dict() for x in chosen[key]]
                statuses += [x.status.value for x in chosen[key]]
        if "periodic" in mods and rep.witness is not None:
            sections["periodic_witness"] = rep.witness.to_dict()
    if "kakutani" in mods:
        mu_u, mu_v = cfg.marginal("u"), cfg.marginal("v")
        kappa = sections.get("gaussian", [{}])[0].get("evidence", {}).get("kappa_hat")
        if "marginals" not in cfg.raw and sections.get("gaussian", [{}])[0].get("status") == "Established":
            # the Gaussian pair that the equivalence test says is equivalent
            mu_v = Gaussian(float(kappa), v.field_dim)
        m_u = InvariantProductMeasure(mu_u, u, cfg.p)
        m_v = InvariantProductMeasure(mu_v, v, cfg.p)
        k = kakutani_decide(m_u, m_v, cfg.horizon_for("kakutani", min(cfg.horizon, 100_000)), cfg.tolerances)
        sections["kakutani"] = {**k.to_dict(), "marginals": {"u": mu_u.to_json(), "v": mu_v.to_json()}}
        statuses.append(Status.UNDECIDED.value if k.verdict == "Undecided" else Status.ESTABLISHED.value)
    if "witness" in mods:
        try:
            w = empirical_orthogonality_witness(
                u, v, InvariantProductMeasure(cfg.marginal("u"), u, cfg.p),
                mc_samples=int(cfg.raw.get("mc_samples", 10_000)), horizon=cfg.horizon_for("witness", 200),
                seed=cfg.seed, epsilon=float(cfg.raw.get("epsilon", 0.1)))
            sections["empirical_witness"] = {"found": True, **w}
            statuses.append(Status.ESTABLISHED.value)
        except (NoWitnessFound, NotSummable) as exc:
            sections["empirical_witness"] = {"found": False, "reason": str(exc)}
            statuses.append(Status.UNDECIDED.value)
    report["sections"] = sections
    if out_dir is not None:
        _write(out_dir, "compare.json", dump_json(report))
    return report, EXIT_UNDECIDED if _all_undecided(statuses) or not statuses else EXIT_OK


_DEFAULT_ALPHAS = np.round(np.linspace(-3.0, 3.0, 121), 12)
_DEFAULT_LAMBDAS = np.array([0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0])


def run_curves(cfg: ExperimentConfig, out_dir) -> tuple[dict, int]:
    """Write ``(alpha, Ph_pm)``, ``(lambda, Theta)`` and ``(n, H_n)`` tables.

    Files: ``acf_h_plus.csv``, ``acf_h_minus.csv``, ``theta.csv``,
    ``hellinger.csv``. No module selected means no files and exit code 2.
    """
    mods = [m for m in (cfg.modules if cfg.modules is not None else CURVE_MODULES) if m in CURVE_MODULES]
    written = []
    if not mods:
        return {"files": []}, EXIT_UNDECIDED
    curves = cfg.raw.get("curves", {})
    if {"acf", "theta"} & set(mods):
        if "profile" not in cfg.raw:
            raise ConfigError("acf and theta curves need a 'profile'")
        f = DensityProfile.from_json(cfg.raw["profile"])
    if "acf" in mods:
        alphas = np.asarray(curves.get("alphas", _DEFAULT_ALPHAS), dtype=float)
        for name, h in zip(("acf_h_plus.csv", "acf_h_minus.csv"), log_substitution(f)):
            path = Path(out_dir) / name
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            write_curve_csv(path, alphas, acf_curve(h, alphas, cfg.tolerances), "alpha")
            written.append(name)
    if "theta" in mods:
        lams = np.asarray(curves.get("lambdas", _DEFAULT_LAMBDAS), dtype=float)
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_curve_csv(Path(out_dir) / "theta.csv", lams, theta_curve(f, lams, cfg.tolerances), "lambda")
        written.append("theta.csv")
    if "hellinger" in mods:
        v = _require_pair(cfg)
        m_u = InvariantProductMeasure(cfg.marginal("u"), cfg.u, cfg.p)
        m_v = InvariantProductMeasure(cfg.marginal("v"), v, cfg.p)
        rep = kakutani_decide(m_u, m_v, cfg.horizon_for("hellinger", min(cfg.horizon, 100_000)), cfg.tolerances)
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        rep.to_csv(Path(out_dir) / "hellinger.csv")
        written.append("hellinger.csv")
    return {"files": written}, EXIT_OK


def run_sample(cfg: ExperimentConfig, out_dir) -> tuple[dict, int]:
    """Draw vectors from the invariant product measure of ``u``; writes ``sample.csv``."""
    opts = cfg.raw.get("sample", {})
    m = InvariantProductMeasure(cfg.marginal("u"), cfg.u, cfg.p)
    size = int(opts.get("size", 100))
    N = int(opts["coords"]) - 1 if "coords" in opts else None
    X = sample(m, N, seed=cfg.seed, size=size, config=cfg.tolerances)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    path = Path(out_dir) / "sample.csv"
    cols = X.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join(f"n{i}" for i in range(cols)) + "\n")
        for row in X:
            fh.write(",".join(repr(complex(x)) if np.iscomplexobj(X) else repr(float(x)) for x in row) + "\n")
    return {"files": ["sample.csv"], "rows": size, "coords": cols}, EXIT_OK


RUNNERS = {"classify": run_classify, "compare": run_compare, "curves": run_curves, "sample": run_sample}
