"""Experiment config files: a small ``key = value`` format with sections.

Example::

    [experiment]
    seeds = [1, 2, 3]
    out = "results.csv"

    [scenario.fuzz]
    kind = ["SyncBox", "SyncTrimmedMean"]   # lists on grid keys expand
    n = 7
    t = 2
    d = [1, 2, 3]
    epsilon = 0.05
    inputs = "random"
    adversary = "seeded"
    adversary_params = {delivery = 0.5}

Values are double-quoted strings, integers, floats, ``true``/``false``,
bracketed lists and ``{key = value}`` maps.  Lists and maps may span lines.
``#`` starts a comment.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import adversary as adv
from . import presets
from .protocol import ProtocolKind
from .simnet import Scenario

MAX_RUNS = 10**5
GRID_KEYS = ("kind", "n", "t", "d", "f", "epsilon", "round_cap", "adversary", "rounds_factor")
SCENARIO_KEYS = set(GRID_KEYS) | {
    "preset", "inputs", "byz_ids", "adversary_params", "counterexample", "low", "high", "seeds",
}
EXPERIMENT_KEYS = {"seeds", "out", "transcripts", "jobs", "scenario", "seed_base"}

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|inf)")
_SECTION = re.compile(r"experiment|scenario\.[A-Za-z0-9_\-]+")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)
        self.line, self.col = line, col


@dataclass
class ExperimentConfig:
    experiment: dict = field(default_factory=dict)
    scenarios: dict[str, dict] = field(default_factory=dict)


# -------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0

    def error(self, msg, at=None):
        at = self.i if at is None else at
        line = self.s.count("\n", 0, at) + 1
        col = at - (self.s.rfind("\n", 0, at) + 1) + 1
        raise ConfigError(msg, line, col)

    def peek(self):
        return self.s[self.i] if self.i < len(self.s) else ""

    def skip_inline(self):
        while self.peek() in (" ", "\t", "\r"):
            self.i += 1
        if self.peek() == "#":
            while self.peek() not in ("\n", ""):
                self.i += 1

    def skip_all(self):
        while True:
            self.skip_inline()
            if self.peek() == "\n":
                self.i += 1
            else:
                return

    def end_of_line(self):
        self.skip_inline()
        if self.peek() not in ("\n", ""):
            self.error(f"unexpected {self.peek()!r} after value")

    def document(self) -> ExperimentConfig:
        cfg = ExperimentConfig()
        current, allowed, where = None, set(), ""
        while True:
            self.skip_all()
            if not self.peek():
                return cfg
            if self.peek() == "[":
                start = self.i
                close = self.s.find("]", self.i)
                newline = self.s.find("\n", self.i)
                if close < 0 or (0 <= newline < close):
                    self.error("unterminated section header")
                name = self.s[self.i + 1:close].strip()
                if not _SECTION.fullmatch(name):
                    self.error(f"unknown section [{name}]", start)
                self.i = close + 1
                self.end_of_line()
                if name == "experiment":
                    current, allowed, where = cfg.experiment, EXPERIMENT_KEYS, "experiment key"
                else:
                    allowed, where = SCENARIO_KEYS, f"key in [{name}]"
                    label = name.split(".", 1)[1]
                    if label in cfg.scenarios:
                        self.error(f"duplicate section [{name}]", start)
                    current = cfg.scenarios[label] = {}
                continue
            start = self.i
            m = _KEY.match(self.s, self.i)
            if not m:
                self.error(f"expected a key, found {self.peek()!r}")
            key = m.group()
            if current is None:
                self.error("key outside of any section", start)
            if key not in allowed:
                self.error(f"unknown {where} {key!r}", start)
            if key in current:
                self.error(f"duplicate key {key!r}", start)
            self.i = m.end()
            self.skip_inline()
            if self.peek() != "=":
                self.error("expected '='")
            self.i += 1
            self.skip_inline()
            current[key] = self.value()
            self.end_of_line()

    def value(self):
        c = self.peek()
        if c == '"':
            return self.string()
        if c == "[":
            return self.sequence("[", "]", self.value)
        if c == "{":
            return dict(self.sequence("{", "}", self.pair))
        for word, val in (("true", True), ("false", False)):
            if self.s.startswith(word, self.i) and not _KEY.match(self.s, self.i + len(word)):
                self.i += len(word)
                return val
        m = _NUMBER.match(self.s, self.i)
        if m and m.group():
            self.i = m.end()
            text = m.group()
            if re.fullmatch(r"[+-]?\d+", text):
                return int(text)
            return float(text)
        self.error(f"expected a value, found {c!r}" if c else "expected a value, found end of file")

    def string(self):
        start = self.i
        self.i += 1
        out = []
        while True:
            c = self.peek()
            if c in ("", "\n"):
                self.error("unterminated string", start)
            self.i += 1
            if c == '"':
                return "".join(out)
            if c == "\\":
                esc = self.peek()
                if esc not in ('"', "\\"):
                    self.error(f"unknown escape \\{esc}")
                out.append(esc)
                self.i += 1
            else:
                out.append(c)

    def pair(self):
        m = _KEY.match(self.s, self.i)
        if not m:
            self.error("expected a key")
        self.i = m.end()
        self.skip_inline()
        if self.peek() != "=":
            self.error("expected '='")
        self.i += 1
        self.skip_inline()
        return m.group(), self.value()

    def sequence(self, open_, close, item):
        self.i += 1
        out = []
        while True:
            self.skip_all()
            if self.peek() == close:
                self.i += 1
                return out
            out.append(item())
            self.skip_all()
            if self.peek() == ",":
                self.i += 1
            elif self.peek() != close:
                self.error(f"expected ',' or {close!r}")


def parse(text: str) -> ExperimentConfig:
    return _Parser(text).document()


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------- serializer


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            raise ValueError("NaN has no config spelling")
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_format(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k} = {_format(x)}" for k, x in v.items()) + "}"
    raise TypeError(f"cannot write {type(v).__name__} to a config")


def dumps(cfg: ExperimentConfig) -> str:
    out = []
    if cfg.experiment:
        out.append("[experiment]")
        out += [f"{k} = {_format(v)}" for k, v in cfg.experiment.items()]
        out.append("")
    for name, sec in cfg.scenarios.items():
        out.append(f"[scenario.{name}]")
        out += [f"{k} = {_format(v)}" for k, v in sec.items()]
        out.append("")
    return "\n".join(out)


# ------------------------------------------------------------- grid expansion


@dataclass
class PlannedRun:
    run_id: str
    scenario: Scenario


def _seeds(cfg: ExperimentConfig, sec: dict, seed_base: int) -> list[int]:
    seeds = sec.get("seeds", cfg.experiment.get("seeds", [0]))
    if not isinstance(seeds, list):
        seeds = [seeds]
    base = seed_base + int(cfg.experiment.get("seed_base", 0))
    return [int(s) + base for s in seeds]


def _build(name: str, params: dict, seed: int) -> Scenario:
    if "preset" in params:
        return presets.preset(params["preset"], seed)
    kind = ProtocolKind.parse(params["kind"])
    try:
        n, t, d = int(params["n"]), int(params["t"]), int(params["d"])
        epsilon = float(params["epsilon"])
    except KeyError as exc:
        raise ConfigError(f"[scenario.{name}] is missing {exc.args[0]!r}") from None
    strategy = adv.from_spec(params.get("adversary", "silent"), params.get("adversary_params"))
    extra = {k: int(params[k]) for k in ("round_cap", "rounds_factor") if k in params}
    extra["counterexample"] = bool(params.get("counterexample", False))
    inputs = params.get("inputs", "random")
    if inputs == "random":
        return presets.random_scenario(
            kind, n, t, d, epsilon=epsilon, seed=seed, adversary=strategy, f=params.get("f"),
            low=float(params.get("low", 0.0)), high=float(params.get("high", 8.0)), name=name,
            **extra,
        )
    byz = params.get("byz_ids", [])
    if "f" in params and int(params["f"]) != len(byz):
        raise ConfigError(f"[scenario.{name}] f={params['f']} but byz_ids has {len(byz)} entries")
    return Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=epsilon, inputs=np.array(inputs, dtype=float),
        byz_ids=tuple(byz), adversary=strategy, seed=seed, name=name, **extra,
    )


def expand(cfg: ExperimentConfig, seed_base: int = 0) -> list[PlannedRun]:
    """All runs of the experiment, in run-id order."""
    sections = []
    ref = cfg.experiment.get("scenario")
    if ref is not None:
        for name in ref if isinstance(ref, list) else [ref]:
            sections.append((name, {"preset": name}))
    sections += list(cfg.scenarios.items())

    plans = []
    for name, sec in sections:
        grid = [k for k in GRID_KEYS if isinstance(sec.get(k), list)]
        combos = list(itertools.product(*(sec[k] for k in grid)))
        seeds = _seeds(cfg, sec, seed_base)
        if len(plans) + len(combos) * len(seeds) > MAX_RUNS:
            raise ConfigError(f"experiment expands to more than {MAX_RUNS} runs")
        for combo in combos:
            params = dict(sec, **dict(zip(grid, combo)))
            for seed in seeds:
                run_id = f"{len(plans):05d}-{name}-s{seed}"
                plans.append(PlannedRun(run_id, _build(name, params, seed)))
    return plans
