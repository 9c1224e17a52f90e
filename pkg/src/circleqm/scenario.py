"""Declarative scenarios: load a YAML config, run it, write a report.

See ``docs/scenario-schema.md`` for the config format. Bundled scenarios live
in the ``scenarios`` package directory and can be referred to by name.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from . import __version__
from .conservation import (
    ChainReport,
    ConservationLedger,
    branch_mean_offsets,
    build_ledger,
    chain_report,
    meter_untouched_check,
    offset_differences,
    table1_oracle,
)
from .interactions import PointerCouple, ShiftPrepare, Swap, apply_chain
from .lattice import (
    AMP_TOL,
    ENTROPY_TOL,
    STANDARD_LABELS,
    CompositeState,
    Label,
    ModeWavefunction,
    Role,
    basis_state,
    entanglement_entropy,
    fidelity_to,
    mutual_information,
    reduced_density,
    superposition,
    tensor,
    uniform_state,
)
from .measurement import RNG_ALGORITHM, sample_counts
from .representations import frame_factorization_residual, rotate

SCHEMA_VERSION = 1
FRAME_TOL = 1e-9
WRAP_POLICIES = ("error", "warn")


class ConfigError(ValueError):
    """Invalid scenario config; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


# ---------------------------------------------------------------------------
# profiles


def _complex(value: Any, where: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(where, "complex amplitudes are written [re, im]")
        value = complex(float(value[0]), float(value[1]))
    try:
        return complex(value.replace(" ", "") if isinstance(value, str) else value)
    except (TypeError, ValueError):
        raise ConfigError(where, f"cannot read {value!r} as a complex number") from None


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(where, f"expected an integer, got {value!r}")
    try:
        return int(value)
    except ValueError:
        raise ConfigError(where, f"expected an integer, got {value!r}") from None


def gaussian_profile(dim: int, center: float, width: float, cutoff: float = 3.0) -> ModeWavefunction:
    """Amplitudes ``exp(-(l - c)^2 / (4 w^2))`` truncated at ``|l - c| <= cutoff * w``.

    ``width`` is the standard deviation of the resulting L distribution
    before truncation.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    reach = math.ceil(cutoff * width)
    c = int(round(center))
    terms = {l: math.exp(-((l - center) ** 2) / (4 * width**2)) for l in range(c - reach, c + reach + 1)}
    return superposition(dim, terms)


def parse_profile(spec: Any, dim: int, where: str) -> ModeWavefunction:
    """Build a wavefunction from a profile entry (see the schema doc)."""
    if not isinstance(spec, Mapping) or len(spec) != 1:
        raise ConfigError(where, "profile must be a mapping with exactly one of basis/uniform/gaussian/amplitudes")
    (kind, arg), = spec.items()
    try:
        if kind == "basis":
            return basis_state(dim, _int(arg, f"{where}.basis"))
        if kind == "uniform":
            if not isinstance(arg, (list, tuple)) or len(arg) != 2:
                raise ConfigError(f"{where}.uniform", "expected [lo, hi]")
            return uniform_state(dim, _int(arg[0], f"{where}.uniform[0]"), _int(arg[1], f"{where}.uniform[1]"))
        if kind == "gaussian":
            if not isinstance(arg, Mapping) or not {"center", "width"} <= set(arg):
                raise ConfigError(f"{where}.gaussian", "needs center and width")
            unknown = set(arg) - {"center", "width", "cutoff"}
            if unknown:
                raise ConfigError(f"{where}.gaussian", f"unknown keys {sorted(unknown)}")
            return gaussian_profile(dim, float(arg["center"]), float(arg["width"]), float(arg.get("cutoff", 3.0)))
        if kind == "amplitudes":
            if isinstance(arg, Mapping):
                pairs = list(arg.items())
            elif isinstance(arg, list) and all(isinstance(p, (list, tuple)) and len(p) == 2 for p in arg):
                pairs = [tuple(p) for p in arg]
            else:
                raise ConfigError(f"{where}.amplitudes", "expected {l: amp} or [[l, amp], ...]")
            terms: dict[int, complex] = {}
            for n, (l, a) in enumerate(pairs):
                key = _int(l, f"{where}.amplitudes[{n}]")
                terms[key] = terms.get(key, 0j) + _complex(a, f"{where}.amplitudes[{l}]")
            return superposition(dim, terms)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None
    raise ConfigError(where, f"unknown profile kind {kind!r}")


# ---------------------------------------------------------------------------
# config


@dataclass
class ScenarioConfig:
    name: str
    labels: tuple[Label, ...]
    dims: dict[str, int]
    states: dict[str, ModeWavefunction]
    chain: list
    measure: str
    scope: tuple[str, ...]
    mode: str = "exhaustive"
    trials: int | None = None
    seed: int | None = None
    wrap_policy: str = "warn"
    expect_conserved: bool = True
    description: str = ""
    frame: dict | None = None
    table1: dict | None = None
    fidelity: dict | None = None
    entropies: list | None = None
    branch_offsets: dict | None = None
    meter: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def initial_state(self) -> CompositeState:
        return tensor([(lab, self.states[lab.name]) for lab in self.labels])


_TOP_KEYS = {
    "schema_version", "name", "description", "dim", "dims", "labels", "states", "chain",
    "measure", "scope", "mode", "wrap_policy", "expect_conserved", "frame", "table1",
    "fidelity", "entropies", "branch_offsets", "meter",
}


def _parse_labels(raw: Mapping, names: list[str]) -> dict[str, Label]:
    custom = raw.get("labels") or {}
    if not isinstance(custom, Mapping):
        raise ConfigError("labels", "expected a mapping name -> {role, pointer}")
    out = {}
    for name in names:
        if name in custom:
            entry = custom[name] or {}
            try:
                role = Role(entry.get("role", "system"))
            except ValueError:
                raise ConfigError(f"labels.{name}.role", f"unknown role {entry.get('role')!r}") from None
            out[name] = Label(name, role, bool(entry.get("pointer", False)))
        elif name in STANDARD_LABELS:
            out[name] = STANDARD_LABELS[name]
        else:
            raise ConfigError(f"labels.{name}", "non-standard label needs a labels entry with its role")
    return out


def _check_ref(name: Any, known: Mapping, where: str) -> str:
    if not isinstance(name, str) or name not in known:
        raise ConfigError(where, f"unknown label {name!r}; known: {sorted(known)}")
    return name


def _parse_chain(raw: Any, dims: Mapping[str, int], labels: Mapping[str, Label]) -> list:
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise ConfigError("chain", "expected a list of steps")
    chain = []
    for n, step in enumerate(raw):
        where = f"chain[{n}]"
        if not isinstance(step, Mapping) or len(step) != 1:
            raise ConfigError(where, "each step is a mapping with one key: shift_prepare, pointer_couple or swap")
        (kind, args), = step.items()
        where = f"{where}.{kind}"
        if not isinstance(args, Mapping):
            raise ConfigError(where, "expected a mapping of arguments")
        if kind == "shift_prepare":
            src = _check_ref(args.get("source"), labels, f"{where}.source")
            tgt = _check_ref(args.get("target"), labels, f"{where}.target")
            if "profile" not in args:
                raise ConfigError(f"{where}.profile", "missing")
            prof = parse_profile(args["profile"], dims[tgt], f"{where}.profile")
            chain.append(ShiftPrepare(src, tgt, prof))
        elif kind == "pointer_couple":
            src = _check_ref(args.get("source"), labels, f"{where}.source")
            met = _check_ref(args.get("meter"), labels, f"{where}.meter")
            if not labels[met].pointer:
                raise ConfigError(f"{where}.meter", f"{met!r} is not a pointer label")
            chain.append(PointerCouple(src, met))
        elif kind == "swap":
            a = _check_ref(args.get("a"), labels, f"{where}.a")
            b = _check_ref(args.get("b"), labels, f"{where}.b")
            chain.append(Swap(a, b))
        else:
            raise ConfigError(where, f"unknown interaction {kind!r}")
    return chain


def parse_scenario(raw: Mapping, name: str | None = None) -> ScenarioConfig:
    if not isinstance(raw, Mapping):
        raise ConfigError("", "scenario must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}")

    states_raw = raw.get("states")
    if not isinstance(states_raw, Mapping) or not states_raw:
        raise ConfigError("states", "expected a non-empty mapping label -> profile")
    names = [str(n) for n in states_raw]
    labels = _parse_labels(raw, names)

    default_dim = raw.get("dim")
    per_label = raw.get("dims") or {}
    if not isinstance(per_label, Mapping):
        raise ConfigError("dims", "expected a mapping label -> size")
    dims = {}
    for n in names:
        d = per_label.get(n, default_dim)
        if d is None:
            raise ConfigError(f"dims.{n}", "no lattice size given (set dim or dims)")
        d = _int(d, f"dims.{n}")
        if d < 1:
            raise ConfigError(f"dims.{n}", "lattice size must be positive")
        dims[n] = d
    for n in per_label:
        _check_ref(n, labels, f"dims.{n}")

    states = {n: parse_profile(states_raw[n], dims[n], f"states.{n}") for n in names}
    chain = _parse_chain(raw.get("chain"), dims, labels)

    measure = _check_ref(raw.get("measure"), labels, "measure")
    scope_raw = raw.get("scope")
    if not isinstance(scope_raw, list) or not scope_raw:
        raise ConfigError("scope", "expected a non-empty list of labels")
    scope = tuple(_check_ref(s, labels, f"scope[{i}]") for i, s in enumerate(scope_raw))
    circle = {dims[s] for s in scope if not labels[s].pointer}
    if len(circle) > 1:
        raise ConfigError("scope", f"circle labels in scope have different sizes {sorted(circle)}")

    mode, trials, seed = "exhaustive", None, None
    mode_raw = raw.get("mode", "exhaustive")
    if isinstance(mode_raw, Mapping) and set(mode_raw) == {"sample"}:
        sample = mode_raw["sample"] or {}
        mode = "sample"
        trials = _int(sample.get("trials", 0), "mode.sample.trials")
        if trials < 1:
            raise ConfigError("mode.sample.trials", "must be positive")
        seed = _int(sample.get("seed", 0), "mode.sample.seed")
    elif mode_raw != "exhaustive":
        raise ConfigError("mode", "expected 'exhaustive' or {sample: {trials, seed}}")

    wrap = raw.get("wrap_policy", "warn")
    if wrap not in WRAP_POLICIES:
        raise ConfigError("wrap_policy", f"expected one of {WRAP_POLICIES}")

    cfg = ScenarioConfig(
        name=str(raw.get("name") or name or "scenario"),
        description=str(raw.get("description", "")).strip(),
        labels=tuple(labels[n] for n in names),
        dims=dims,
        states=states,
        chain=chain,
        measure=measure,
        scope=scope,
        mode=mode,
        trials=trials,
        seed=seed,
        wrap_policy=wrap,
        expect_conserved=bool(raw.get("expect_conserved", True)),
        raw=dict(raw),
    )
    _parse_checks(cfg, raw, labels)
    return cfg


def _parse_checks(cfg: ScenarioConfig, raw: Mapping, labels: Mapping[str, Label]) -> None:
    if raw.get("frame") is not None:
        fr = raw["frame"]
        f = _check_ref(fr.get("frame"), labels, "frame.frame")
        s = _check_ref(fr.get("system"), labels, "frame.system")
        if "target" not in fr:
            raise ConfigError("frame.target", "missing")
        cfg.frame = {
            "frame": f,
            "system": s,
            "target": parse_profile(fr["target"], cfg.dims[s], "frame.target"),
            "control_rotation": float(fr.get("control_rotation", 0.0)),
        }
    if raw.get("table1") is not None:
        t = raw["table1"]
        d = int(t.get("dim", max(cfg.dims.values())))
        missing = {"phi_g", "phi_p", "psi", "l0"} - set(t)
        if missing:
            raise ConfigError("table1", f"missing {sorted(missing)}")
        cfg.table1 = {
            "phi_g": parse_profile(t["phi_g"], d, "table1.phi_g"),
            "phi_p": parse_profile(t["phi_p"], d, "table1.phi_p"),
            "psi": parse_profile(t["psi"], d, "table1.psi"),
            "l0": _int(t["l0"], "table1.l0"),
        }
    if raw.get("fidelity") is not None:
        fd = raw["fidelity"]
        lab = _check_ref(fd.get("label"), labels, "fidelity.label")
        cfg.fidelity = {"label": lab, "target": parse_profile(fd.get("target"), cfg.dims[lab], "fidelity.target")}
    if raw.get("entropies") is not None:
        ents = raw["entropies"]
        if not isinstance(ents, list):
            raise ConfigError("entropies", "expected a list of labels or 'A:B' pairs")
        for i, e in enumerate(ents):
            for part in str(e).split(":"):
                _check_ref(part, labels, f"entropies[{i}]")
        cfg.entropies = [str(e) for e in ents]
    if raw.get("branch_offsets") is not None:
        bo = raw["branch_offsets"]
        cfg.branch_offsets = {
            "system": _check_ref(bo.get("system"), labels, "branch_offsets.system"),
            "frame": _check_ref(bo.get("frame"), labels, "branch_offsets.frame"),
        }
    if raw.get("meter") is not None:
        cfg.meter = _check_ref(raw["meter"], labels, "meter")


def bundled_scenarios() -> list[str]:
    root = resources.files("circleqm") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _read_text(source: str | Path) -> tuple[str, str]:
    path = Path(source)
    if path.suffix in (".yaml", ".yml", ".json") or path.exists():
        return path.read_text(encoding="utf-8"), path.stem
    name = str(source)
    if name not in bundled_scenarios():
        raise FileNotFoundError(f"no scenario file or bundled scenario named {name!r}")
    return (resources.files("circleqm") / "scenarios" / f"{name}.yaml").read_text(encoding="utf-8"), name


def load_scenario(source: str | Path) -> ScenarioConfig:
    """Load a scenario from a YAML/JSON file or a bundled scenario name."""
    text, stem = _read_text(source)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(where, f"YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    return parse_scenario(raw, name=stem)


# ---------------------------------------------------------------------------
# running


def _dist(d: Mapping[int, float]) -> dict[str, float]:
    return {str(k): float(v) for k, v in d.items()}


def _chain_dict(r: ChainReport) -> dict:
    return {f: _dist(getattr(r, f)) for f in ChainReport.DISTRIBUTIONS}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


@dataclass
class Report:
    config: ScenarioConfig
    ledger: ConservationLedger
    seed: int | None
    trials: int | None
    wrap_policy: str
    frequencies: dict[int, float] | None = None
    table1: dict | None = None
    residuals: dict = field(default_factory=dict)
    entropies: dict = field(default_factory=dict)
    fidelity: dict | None = None
    branch_offsets: dict | None = None
    meter: dict | None = None
    timestamp: str | None = None

    @property
    def violations(self) -> list[str]:
        out = []
        if self.config.expect_conserved and not self.ledger.conserved(AMP_TOL):
            out.append(f"ledger deviation {self.ledger.max_deviation:.3e} exceeds {AMP_TOL:g}")
        if self.table1 is not None and self.table1["max_deviation"] > AMP_TOL:
            out.append(f"chain report differs from closed form by {self.table1['max_deviation']:.3e}")
        if "frame" in self.residuals and self.residuals["frame"] > FRAME_TOL:
            out.append(f"frame factorization residual {self.residuals['frame']:.3e} exceeds {FRAME_TOL:g}")
        if self.meter is not None and not self.meter["ok"]:
            out.append(f"meter angular momentum changed by {self.meter['deviation']:.3e}")
        return out

    def to_dict(self) -> dict:
        outcomes = []
        for e in self.ledger.per_outcome:
            row = {
                "outcome": e.value,
                "probability": e.probability,
                "deviation": e.deviation,
                "distribution": _dist(e.distribution),
            }
            if self.frequencies is not None:
                row["frequency"] = self.frequencies.get(e.value, 0.0)
            outcomes.append(row)
        out = {
            "schema_version": SCHEMA_VERSION,
            "generator": f"circleqm {__version__}",
            "scenario": self.config.name,
            "description": self.config.description,
            "mode": self.config.mode if self.trials is None else "sample",
            "seed": self.seed,
            "rng": RNG_ALGORITHM if self.trials is not None else None,
            "trials": self.trials,
            "wrap_policy": self.wrap_policy,
            "measured": self.ledger.measured,
            "scope": list(self.ledger.scope),
            "baseline": _dist(self.ledger.baseline),
            "outcomes": outcomes,
            "max_deviation": self.ledger.max_deviation,
            "expect_conserved": self.config.expect_conserved,
            "conserved": self.ledger.conserved(AMP_TOL),
            "table1": self.table1 or {},
            "residuals": self.residuals,
            "entropies": self.entropies,
            "fidelity": self.fidelity or {},
            "branch_offsets": self.branch_offsets or {},
            "meter": self.meter or {},
            "violations": self.violations,
            "config": _jsonable(self.config.raw),
        }
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        return out


def run_scenario(
    config: ScenarioConfig,
    seed: int | None = None,
    trials: int | None = None,
    wrap_policy: str | None = None,
    timestamp: bool = False,
) -> Report:
    """Execute a scenario; ``seed``, ``trials`` and ``wrap_policy`` override the config.

    Giving ``trials`` switches to sampling mode. Results are deterministic for
    a fixed seed.
    """
    wrap = wrap_policy or config.wrap_policy
    if wrap not in WRAP_POLICIES:
        raise ConfigError("wrap_policy", f"expected one of {WRAP_POLICIES}")
    trials = trials if trials is not None else config.trials
    seed = seed if seed is not None else config.seed
    if trials is not None and seed is None:
        seed = 0

    initial = config.initial_state()
    evolved = apply_chain(initial, config.chain, wrap)
    ledger = build_ledger(initial, config.chain, config.measure, config.scope, wrap, evolved=evolved)
    report = Report(config, ledger, seed, trials, wrap)

    if trials is not None:
        counts = sample_counts(evolved, config.measure, trials, seed)
        report.frequencies = {v: c / trials for v, c in counts.items()}

    if config.table1 is not None:
        t = config.table1
        sim = chain_report(t["phi_g"], t["phi_p"], t["psi"], t["l0"], wrap)
        oracle = table1_oracle(t["phi_g"], t["phi_p"], t["l0"])
        report.table1 = {
            "measured_value": t["l0"],
            "simulated": _chain_dict(sim),
            "oracle": _chain_dict(oracle),
            "max_deviation": sim.deviation_from(oracle),
        }

    if config.frame is not None:
        f = config.frame
        report.residuals["frame"] = frame_factorization_residual(evolved, f["frame"], f["system"], f["target"])
        if f["control_rotation"]:
            rotated = rotate(evolved, f["control_rotation"], f["system"])
            report.residuals["control"] = frame_factorization_residual(rotated, f["frame"], f["system"], f["target"])
            report.residuals["control_rotation"] = f["control_rotation"]

    for e in config.entropies if config.entropies is not None else [lab.name for lab in config.labels]:
        if ":" in e:
            a, b = e.split(":")
            value = mutual_information(evolved, a, b)
        else:
            value = entanglement_entropy(evolved, e)
        report.entropies[e] = 0.0 if abs(value) < ENTROPY_TOL else value

    if config.fidelity is not None:
        lab = config.fidelity["label"]
        report.fidelity = {
            "label": lab,
            "value": fidelity_to(config.fidelity["target"], reduced_density(evolved, lab)),
        }

    if config.branch_offsets is not None:
        bo = config.branch_offsets
        means = branch_mean_offsets(evolved, bo["system"], bo["frame"])
        report.branch_offsets = {
            "system": bo["system"],
            "frame": bo["frame"],
            "means": _dist(means),
            "differences": {f"{a}:{b}": d for (a, b), d in offset_differences(means).items()},
        }

    if config.meter is not None:
        ok, dev = meter_untouched_check(initial, evolved, config.meter)
        report.meter = {"label": config.meter, "ok": ok, "deviation": dev}

    if timestamp:
        report.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return report


# ---------------------------------------------------------------------------
# output


def report_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def report_csv(report: Report) -> str:
    buf = io.StringIO()
    sampled = report.frequencies is not None
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["outcome", "probability", "deviation"] + (["frequency"] if sampled else []))
    for e in report.ledger.per_outcome:
        row = [e.value, repr(float(e.probability)), repr(float(e.deviation))]
        if sampled:
            row.append(repr(float(report.frequencies.get(e.value, 0.0))))
        writer.writerow(row)
    return buf.getvalue()


def emit_report(report: Report, fmt: str = "json", path: str | Path | None = None) -> str:
    """Serialize ``report``; write to ``path`` when given. Returns the text."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
