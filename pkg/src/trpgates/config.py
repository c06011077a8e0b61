"""Run configuration: YAML files, built-in presets and ``key=value`` overrides.

A configuration is a nested mapping::

    command: simulate
    target: hadamard
    frame: adiabatic
    sweep:  {lambda: 5.8511, eta4: 2.928e-4, tau0: 160.0}
    plan:   {steps: 160000, rule: midpoint}

Two-qubit runs add ``system`` and usually ``schedule``; ``optimize`` runs add
``optimizer`` and ``space``; ``scan`` and ``converge`` runs add sections of the
same names; ``report`` runs list other configs under ``runs``.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .gates import GateSetup
from .model import SweepParameters, TwoQubitSystemParameters, target_gate
from .optimize import (
    AnnealingSettings,
    NelderMeadSettings,
    OptimizerConfig,
    ParameterSpace,
    params_of,
)
from .propagate import PropagationPlan
from .symmetrize import SymmetrizationSchedule, trivial_group, vcp_group

COMMANDS = ("simulate", "optimize", "scan", "converge", "report")
OUTPUT_ENV = "TRP_OUTPUT_DIR"
DEFAULT_OUTPUT = "trp_runs.jsonl"
GROUPS = {"vcp": vcp_group, "trivial": lambda: trivial_group(4)}


class ConfigError(ValueError):
    """A configuration value is missing or invalid; the message names the field."""


def preset_names() -> list[str]:
    files = resources.files("trpgates").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def load_preset(name: str) -> dict:
    path = resources.files("trpgates").joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ConfigError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return yaml.safe_load(path.read_text())


def load_raw(source: str) -> dict:
    """Read a config from a YAML file, a JSON-lines run record, or a preset name.

    For a ``.jsonl`` file the config echo of the last record is used, which
    is how runs are replayed.  For an optimize record the optimum's sweep and
    system values replace the starting point.
    """
    path = Path(source)
    if path.is_file():
        if path.suffix == ".jsonl":
            from .records import read_records
            recs = read_records(path)
            if not recs:
                raise ConfigError(f"{source} holds no run records")
            raw = copy.deepcopy(recs[-1]["config"])
            best = recs[-1].get("extra", {}).get("best_config")
            if best:
                raw.update({k: copy.deepcopy(best[k]) for k in ("sweep", "system") if k in best})
            return raw
        data = yaml.safe_load(path.read_text())
        if not isinstance(data, dict):
            raise ConfigError(f"{source} does not contain a mapping")
        return data
    return load_preset(source)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as YAML scalars or lists."""
    raw = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        if not all(parts):
            raise ConfigError(f"override {item!r} has an empty key")
        node = raw
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r}: {p!r} is not a section")
            node = nxt
        node[parts[-1]] = yaml.safe_load(text)
    return raw


def _section(raw, name, required=False) -> dict | None:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section {name!r}")
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return sec


def _num(sec, key, section, default=None, kind=float):
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing field {section}.{key}")
        return default
    try:
        v = kind(sec[key])
    except (TypeError, ValueError):
        raise ConfigError(f"field {section}.{key} must be a {kind.__name__}, got {sec[key]!r}") from None
    if kind is int and v != sec[key]:
        raise ConfigError(f"field {section}.{key} must be an integer")
    return v


def _check_keys(sec, allowed, section):
    extra = set(sec) - set(allowed)
    if extra:
        raise ConfigError(f"unknown field(s) in {section}: {sorted(extra)}")


@dataclass
class RunConfig:
    command: str
    setup: GateSetup
    optimizer: OptimizerConfig | None = None
    space: ParameterSpace | None = None
    scan: dict | None = None
    converge: dict | None = None
    runs: list = field(default_factory=list)
    output_path: str = DEFAULT_OUTPUT
    raw: dict = field(default_factory=dict)

    # convenience views matching the record layout
    @property
    def target(self) -> str:
        return self.setup.target

    @property
    def sweep(self) -> SweepParameters:
        return self.setup.sweep

    @property
    def system(self):
        return self.setup.system

    @property
    def plan(self) -> PropagationPlan:
        return self.setup.plan

    @property
    def schedule(self):
        return self.setup.schedule


def _build_setup(raw: dict) -> GateSetup:
    try:
        n = target_gate(raw.get("target", "")).qubits
    except ValueError as exc:
        raise ConfigError(f"target: {exc}") from None
    sw = _section(raw, "sweep", required=True)
    _check_keys(sw, ("lambda", "eta4", "tau0"), "sweep")
    sys_sec = _section(raw, "system")
    plan_sec = _section(raw, "plan") or {}
    _check_keys(plan_sec, ("steps", "rule", "convergence_check", "convergence_tol"), "plan")
    sch_sec = _section(raw, "schedule")
    try:
        sweep = SweepParameters(_num(sw, "lambda", "sweep"), _num(sw, "eta4", "sweep"), _num(sw, "tau0", "sweep"))
        system = None
        if sys_sec is not None:
            _check_keys(sys_sec, ("c4", "d1", "d2", "d3", "d4"), "system")
            system = TwoQubitSystemParameters(**{k: float(v) for k, v in sys_sec.items()})
        schedule = None
        if sch_sec is not None:
            _check_keys(sch_sec, ("group", "n_subintervals", "slices_per_subsub"), "schedule")
            gname = sch_sec.get("group", "vcp")
            if gname not in GROUPS:
                raise ConfigError(f"schedule.group must be one of {sorted(GROUPS)}")
            schedule = SymmetrizationSchedule(
                GROUPS[gname](),
                _num(sch_sec, "n_subintervals", "schedule", 2500, int),
                _num(sch_sec, "slices_per_subsub", "schedule", 4, int),
            )
        default_steps = schedule.total_slices if schedule is not None else 160_000
        plan = PropagationPlan(
            steps=_num(plan_sec, "steps", "plan", default_steps, int),
            rule=plan_sec.get("rule", "midpoint"),
            convergence_check=bool(plan_sec.get("convergence_check", False)),
            convergence_tol=_num(plan_sec, "convergence_tol", "plan", 1e-6),
        )
        return GateSetup(
            target=raw["target"],
            sweep=sweep,
            system=system,
            plan=plan,
            schedule=schedule,
            frame=raw.get("frame", "adiabatic" if n == 1 else "lab"),
            twist_sense=int(raw.get("twist_sense", -1)),
            allow_one_qubit_symmetrization=bool(raw.get("allow_one_qubit_symmetrization", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _build_optimizer(sec: dict, seed, workers) -> OptimizerConfig:
    _check_keys(sec, ("algorithm", "seed", "max_evals", "nm", "sa"), "optimizer")
    try:
        nm = NelderMeadSettings(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in (sec.get("nm") or {}).items()})
        sa = AnnealingSettings(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in (sec.get("sa") or {}).items()})
        return OptimizerConfig(
            algorithm=sec.get("algorithm", "nelder_mead"),
            seed=int(seed if seed is not None else sec.get("seed", 0)),
            max_evals=int(sec.get("max_evals", 2000)),
            nm=nm,
            sa=sa,
            workers=workers,
        )
    except TypeError as exc:
        raise ConfigError(f"optimizer: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from None


def _build_space(sec: dict, setup: GateSetup) -> ParameterSpace:
    _check_keys(sec, ("free", "rel", "fixed"), "space")
    point = params_of(setup)
    free = sec.get("free")
    try:
        if isinstance(free, dict):
            names = tuple(free)
            for n in names:
                if n not in point:
                    raise ConfigError(f"space.free: unknown parameter {n!r}")
            lo = [float(free[n][0]) for n in names]
            hi = [float(free[n][1]) for n in names]
            fixed = {k: v for k, v in point.items() if k not in names}
            start = tuple(min(max(point[n], a), b) for n, a, b in zip(names, lo, hi))
            return ParameterSpace(names, lo, hi, fixed, start)
        if isinstance(free, list) and "rel" in sec:
            for n in free:
                if n not in point:
                    raise ConfigError(f"space.free: unknown parameter {n!r}")
            return ParameterSpace.box_around(point, free, float(sec["rel"]))
    except ConfigError:
        raise
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"space: {exc}") from None
    raise ConfigError("space.free must map names to [lower, upper] or list names together with space.rel")


def build_config(raw: dict, seed: int | None = None, workers: int = 1,
                 out: str | None = None) -> RunConfig:
    raw = copy.deepcopy(raw)
    command = raw.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    if seed is not None and command == "optimize" and isinstance(raw.get("optimizer"), dict):
        raw["optimizer"]["seed"] = int(seed)
    output = resolve_output(out or raw.get("output_path"))
    if command == "report":
        runs = raw.get("runs")
        if not isinstance(runs, list) or not runs:
            raise ConfigError("report needs a non-empty 'runs' list of presets or config paths")
        return RunConfig(command, None, runs=list(runs), output_path=output, raw=raw)
    setup = _build_setup(raw)
    cfg = RunConfig(command, setup, output_path=output, raw=raw)
    if command == "optimize":
        cfg.optimizer = _build_optimizer(_section(raw, "optimizer", required=True), seed, workers)
        cfg.space = _build_space(_section(raw, "space", required=True), setup)
    elif command == "scan":
        sec = _section(raw, "scan", required=True)
        _check_keys(sec, ("param", "offsets"), "scan")
        if "param" not in sec:
            raise ConfigError("missing field scan.param")
        offsets = sec.get("offsets", [])
        if not isinstance(offsets, list):
            raise ConfigError("scan.offsets must be a list")
        if sec["param"] not in params_of(setup):
            raise ConfigError(f"scan.param: unknown parameter {sec['param']!r}")
        cfg.scan = {"param": sec["param"], "offsets": [float(o) for o in offsets]}
    elif command == "converge":
        sec = _section(raw, "converge") or {}
        _check_keys(sec, ("base_steps", "doublings", "n_subintervals"), "converge")
        doublings = _num(sec, "doublings", "converge", 3, int)
        if doublings < 1:
            raise ConfigError("converge.doublings must be at least 1")
        cfg.converge = {
            "base_steps": _num(sec, "base_steps", "converge", max(1, setup.plan.steps // 4), int),
            "doublings": doublings,
            "n_subintervals": [int(n) for n in sec.get("n_subintervals", [])],
        }
    return cfg


def resolve_output(path: str | None) -> str:
    """Output file, moved into ``$TRP_OUTPUT_DIR`` when that is set."""
    p = Path(path or DEFAULT_OUTPUT)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        p = Path(env) / p.name
    return str(p)


def load_config(source: str, overrides=(), seed=None, workers: int = 1, out=None) -> RunConfig:
    return build_config(apply_overrides(load_raw(source), list(overrides)), seed, workers, out)
