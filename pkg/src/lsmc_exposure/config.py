"""Run configuration: strict parsing, validation and canonical serialization.

A config is a TOML (or JSON) document::

    seed = 42
    workers = 1
    out = "out"

    [model]        # s0, mu_outer, r_inner, sigma, maturity, fixing_interval_days, day_count
    [instrument]   # kind, direction, strike, barrier, rebate, alpha, beta, k1, k2, weights, payment_every
    [plan]         # n_outer, p_inner, p_baseline, quantile, crn, steps
    [basis]        # family, degree, max_degree, threshold
    [study.gbm_call] / [study.variance] / [study.sse]

Every section is optional.  Unknown keys are rejected and every error names
the offending field.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import instruments as inst
from .engine import DEFAULT_P_INNER, MarketModel, RunPlan
from .errors import ConfigError
from .regression import FAMILIES, BasisSpec
from .studies import GbmCallStudyConfig, SseStudyConfig, StudyConfig, VarianceStudyConfig

DEFAULT_INSTRUMENTS = {
    "vanilla": dict(direction="call", strike=100.0),
    "asian": dict(direction="put", strike=100.0),
    "barrier_uo": dict(direction="call", strike=100.0, barrier=130.0, rebate=2.0),
    "accum_forward": dict(direction="long", strike=95.0, barrier=110.0, alpha=1.0, beta=2.0,
                          payment_every=6),
    "tarn": dict(direction="receiver", strike=100.0, barrier=380.0, k1=102.0, k2=100.0,
                 payment_every=6),
}


@dataclass(frozen=True)
class PlanFields:
    n_outer: int = 1000
    p_inner: int | None = None  # None: per-instrument default
    p_baseline: int = 4096
    quantile: float = 0.95
    crn: bool = False
    steps: tuple[int, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    model: MarketModel = MarketModel()
    instrument: inst.InstrumentSpec = inst.InstrumentSpec("asian", "put", strike=100.0)
    plan: PlanFields = PlanFields(p_inner=DEFAULT_P_INNER["asian"])
    basis: BasisSpec = BasisSpec()
    study: StudyConfig = StudyConfig()
    seed: int = 42
    workers: int = 1
    out: str = "out"

    def run_plan(self, with_baseline: bool = True) -> RunPlan:
        return RunPlan(
            instrument=self.instrument,
            market=self.model,
            basis=self.basis,
            n_outer=self.plan.n_outer,
            p_inner=self.plan.p_inner,
            p_baseline=self.plan.p_baseline if with_baseline else 0,
            steps=self.plan.steps,
            crn=self.plan.crn,
            quantile=self.plan.quantile,
            seed=self.seed,
            workers=self.workers,
        )

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        """Canonical effective config; ``parse_config`` of its JSON gives back ``self``."""
        d = dataclasses.asdict(self)
        barrier = d["instrument"]["barrier"]
        d["instrument"]["barrier"] = None if math.isinf(barrier) else barrier
        for section in (d["instrument"], d["plan"], d["basis"]):
            for key, value in list(section.items()):
                if isinstance(value, tuple):
                    section[key] = list(value)
        for sub in d["study"].values():
            for key, value in sub.items():
                if isinstance(value, tuple):
                    sub[key] = list(value)
        if d["basis"]["bounds"] is None:
            del d["basis"]["bounds"]
        else:
            d["basis"]["bounds"] = list(d["basis"]["bounds"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# Field checking


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def section(self, doc: dict, name: str, allowed) -> dict:
        value = doc.get(name, {})
        if value is None:
            value = {}
        if not isinstance(value, dict):
            self.errors.append(f"{name} must be a table")
            return {}
        for key in value:
            if key not in allowed:
                self.errors.append(f"{name}.{key}: unknown key")
        return value

    def get(self, table: dict, prefix: str, key: str, kind, default, check=None, message=""):
        if key not in table or (table[key] is None and kind is not _optional_float):
            return default
        value = table[key]
        name = f"{prefix}.{key}" if prefix else key
        try:
            value = _coerce(value, kind)
        except (TypeError, ValueError):
            self.errors.append(f"{name}: expected {_kind_name(kind)}, got {type(value).__name__}")
            return default
        if check is not None and not check(value):
            self.errors.append(f"{name} {message}")
            return default
        return value


def _optional_float(value):
    # Marker kind: a number, with null meaning "no barrier" (infinity).
    return value


def _kind_name(kind) -> str:
    names = {int: "an integer", float: "a number", bool: "a boolean", str: "a string",
             _optional_float: "a number", "int_list": "a list of integers",
             "float_list": "a list of numbers"}
    return names.get(kind, str(kind))


def _coerce(value, kind):
    if kind is bool:
        if not isinstance(value, bool):
            raise TypeError
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError
        return value
    if kind is float or kind is _optional_float:
        if value is None and kind is _optional_float:
            return math.inf
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise TypeError
        return value
    if kind in ("int_list", "float_list"):
        if not isinstance(value, (list, tuple)):
            raise TypeError
        item = int if kind == "int_list" else float
        return tuple(_coerce(v, item) for v in value)
    raise TypeError(kind)


_MODEL_KEYS = [f.name for f in dataclasses.fields(MarketModel)]
_INSTRUMENT_KEYS = [f.name for f in dataclasses.fields(inst.InstrumentSpec)]
_PLAN_KEYS = [f.name for f in dataclasses.fields(PlanFields)]
_BASIS_KEYS = ["family", "degree", "max_degree", "threshold", "bounds"]
_TOP_KEYS = ["seed", "workers", "out", "model", "instrument", "plan", "basis", "study"]
_STUDIES = {
    "gbm_call": GbmCallStudyConfig,
    "variance": VarianceStudyConfig,
    "sse": SseStudyConfig,
}

_positive = (lambda v: v > 0, "must be > 0")
_at_least_one = (lambda v: v >= 1, "must be ≥ 1")


def _load(text: str, fmt: str) -> dict:
    if fmt == "toml":
        return tomllib.loads(text)
    if fmt == "json":
        return json.loads(text)
    raise ValueError(f"unknown config format {fmt!r}")


def parse_config(text: str | dict, fmt: str = "toml") -> RunConfig:
    """Validated :class:`RunConfig` from a TOML/JSON document or a mapping."""
    try:
        doc = text if isinstance(text, dict) else _load(text, fmt)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError([f"config is not valid {fmt}: {exc}"]) from exc
    c = _Checker()
    for key in doc:
        if key not in _TOP_KEYS:
            c.errors.append(f"{key}: unknown key")

    seed = c.get(doc, "", "seed", int, 42, lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer")
    workers = c.get(doc, "", "workers", int, 1, *_at_least_one)
    out = c.get(doc, "", "out", str, "out")

    m = c.section(doc, "model", _MODEL_KEYS)
    defaults = MarketModel()
    model_kwargs = dict(
        s0=c.get(m, "model", "s0", float, defaults.s0, *_positive),
        mu_outer=c.get(m, "model", "mu_outer", float, defaults.mu_outer),
        r_inner=c.get(m, "model", "r_inner", float, defaults.r_inner),
        sigma=c.get(m, "model", "sigma", float, defaults.sigma, *_positive),
        maturity=c.get(m, "model", "maturity", float, defaults.maturity, *_positive),
        fixing_interval_days=c.get(m, "model", "fixing_interval_days", int,
                                   defaults.fixing_interval_days, *_at_least_one),
        day_count=c.get(m, "model", "day_count", int, defaults.day_count, *_at_least_one),
    )
    model = MarketModel(**model_kwargs)
    n_fixings = None
    try:
        n_fixings = len(model.schedule())
    except ValueError as exc:
        c.errors.append(f"model.maturity: {exc}")

    i = c.section(doc, "instrument", _INSTRUMENT_KEYS)
    kind = c.get(i, "instrument", "kind", str, "asian", lambda v: v in inst.KINDS,
                 f"must be one of {inst.KINDS}")
    base = DEFAULT_INSTRUMENTS[kind]
    instrument_kwargs = dict(
        kind=kind,
        direction=c.get(i, "instrument", "direction", str, base["direction"],
                        lambda v: v in inst.DIRECTIONS[kind], f"must be one of {inst.DIRECTIONS[kind]}"),
        strike=c.get(i, "instrument", "strike", float, base.get("strike", 100.0)),
        barrier=c.get(i, "instrument", "barrier", _optional_float, base.get("barrier", math.inf)),
        rebate=c.get(i, "instrument", "rebate", float, base.get("rebate", 0.0)),
        alpha=c.get(i, "instrument", "alpha", float, base.get("alpha", 1.0)),
        beta=c.get(i, "instrument", "beta", float, base.get("beta", 1.0)),
        k1=c.get(i, "instrument", "k1", float, base.get("k1", 0.0)),
        k2=c.get(i, "instrument", "k2", float, base.get("k2", 0.0)),
        weights=c.get(i, "instrument", "weights", "float_list", None),
        payment_every=c.get(i, "instrument", "payment_every", int, base.get("payment_every", 1),
                            *_at_least_one),
    )
    instrument = None
    try:
        instrument = inst.InstrumentSpec(**instrument_kwargs)
        if n_fixings is not None:
            instrument.validate(model.s0, n_fixings)
    except ValueError as exc:
        c.errors.append(f"instrument: {exc}")

    p = c.section(doc, "plan", _PLAN_KEYS)
    plan = PlanFields(
        n_outer=c.get(p, "plan", "n_outer", int, 1000, lambda v: v >= 2, "must be ≥ 2"),
        p_inner=c.get(p, "plan", "p_inner", int, DEFAULT_P_INNER[kind], *_at_least_one),
        p_baseline=c.get(p, "plan", "p_baseline", int, 4096, lambda v: v >= 0 and v % 2 == 0,
                         "must be a non-negative even integer"),
        quantile=c.get(p, "plan", "quantile", float, 0.95, lambda v: 0 < v < 1, "must be in (0, 1)"),
        crn=c.get(p, "plan", "crn", bool, False),
        steps=c.get(p, "plan", "steps", "int_list", None),
    )
    if plan.steps == ():
        plan = dataclasses.replace(plan, steps=None)
    if plan.p_baseline and plan.p_inner and plan.p_baseline < 32 * plan.p_inner:
        c.errors.append("plan.p_baseline must be at least 32 * plan.p_inner (or 0 to disable)")
    if plan.steps is not None and n_fixings is not None:
        if list(plan.steps) != sorted(set(plan.steps)) or not all(0 <= s < n_fixings for s in plan.steps):
            c.errors.append(f"plan.steps must be strictly increasing indices in [0, {n_fixings})")

    b = c.section(doc, "basis", _BASIS_KEYS)
    basis = None
    max_degree = c.get(b, "basis", "max_degree", int, 10, lambda v: v >= 0, "must be ≥ 0")
    try:
        bounds = c.get(b, "basis", "bounds", "float_list", None)
        basis = BasisSpec(
            family=c.get(b, "basis", "family", str, "forsythe", lambda v: v in FAMILIES,
                         f"must be one of {FAMILIES}"),
            degree=c.get(b, "basis", "degree", int, 3, lambda v: 0 <= v <= max_degree,
                         f"must be in [0, {max_degree}]"),
            threshold=c.get(b, "basis", "threshold", float, None),
            bounds=tuple(bounds) if bounds is not None else None,
            max_degree=max_degree,
        )
    except ValueError as exc:
        c.errors.append(f"basis: {exc}")

    s = c.section(doc, "study", list(_STUDIES))
    study_parts = {}
    for name, cls in _STUDIES.items():
        sub = s.get(name, {}) if isinstance(s.get(name, {}), dict) else {}
        if name in s and not isinstance(s[name], dict):
            c.errors.append(f"study.{name} must be a table")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        for key in sub:
            if key not in fields:
                c.errors.append(f"study.{name}.{key}: unknown key")
        kwargs = {}
        default = cls()
        for fname in fields:
            dv = getattr(default, fname)
            kind = "int_list" if isinstance(dv, tuple) else type(dv)
            kwargs[fname] = c.get(sub, f"study.{name}", fname, kind, dv)
        if kwargs["n_outer"] < 2:
            c.errors.append(f"study.{name}.n_outer must be ≥ 2")
        if "truth_paths" in kwargs and (kwargs["truth_paths"] < 2 or kwargs["truth_paths"] % 2):
            c.errors.append(f"study.{name}.truth_paths must be a positive even integer")
        if any(v < 1 for v in kwargs.get("inner_paths", ())) or kwargs.get("p_inner", 1) < 1:
            c.errors.append(f"study.{name}: inner path counts must be ≥ 1")
        study_parts[name] = cls(**kwargs)
    study = StudyConfig(**study_parts)

    if c.errors:
        raise ConfigError(c.errors)
    cfg = RunConfig(model, instrument, plan, basis, study, seed, workers, out)
    try:
        cfg.run_plan()
    except ValueError as exc:
        raise ConfigError([f"plan: {exc}"]) from exc
    return cfg


def load_config(path) -> RunConfig:
    from pathlib import Path

    path = Path(path)
    fmt = "json" if path.suffix == ".json" else "toml"
    return parse_config(path.read_text(), fmt)
