"""YAML experiment configuration.

Grammar (every key optional; omitted keys take the listed default)::

    system:                   # default: golden mean on symbols 1, 2
      alphabet: [a, b, c]     # labels, or an integer n for labels 1..n
      matrix: [[1, 1, 0], ...]
    subsystem:                # default: same as system (reflexive comparison)
      matrix: [[...]]         # alphabet is shared with `system`
    potential:                # default: 0.5 on the first symbol, 0 elsewhere
      radius: 0
      values: {a: 0.5, b: 0}  # radius 0 shorthand
      table: {"a b a": 1.0}   # window word (length 2r+1) -> value
    measure:                  # default: uniform over allowed successors
      P: [[...]]              # or the string "uniform"
      pi: [...]               # optional, checked for stationarity
    submeasure: {...}         # as `measure`, on the subsystem
    scan:                     # fields of ScanParams
      grid_count: 1001
      grid_lo: null           # null -> E_0 = -5/2 - |V|_inf
      grid_hi: null
      theta: 0.01
      n_steps: 100000
      n_samples: 20
      seed: 0
      max_period: 10
      tol_delta: 1.0e-6
      cluster_fraction: 0.2
      j_slack: 1.0e-9
    functional:               # explicit inputs for compute-j (otherwise derived)
      U: [0.1, 0.4]
      S: [[-2, 0], [0, 2]]
      sup_norm: 0
    output:
      dir: out
      formats: [json, csv]

Numbers may be written as rationals, e.g. ``"2/3"``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from .cocycle import Potential
from .intervals import IntervalSet
from .markov import MarkovMeasure, MeasureError, stationary_distribution, validate_measure
from .symbolic import SubshiftEmbedding, SymbolError, TransitionSystem, is_sub_embedding
from .zeros import ScanParams


class ConfigError(ValueError):
    def __init__(self, key: str, line: int | None, message: str):
        self.key, self.line = key, line
        where = f"line {line}, " if line else ""
        super().__init__(f"config error ({where}key '{key}'): {message}")


@dataclass
class SystemBlock:
    alphabet: list[str] = field(default_factory=lambda: ["1", "2"])
    matrix: list[list[int]] = field(default_factory=lambda: [[1, 1], [1, 0]])


@dataclass
class PotentialBlock:
    radius: int = 0
    table: dict[str, float] | None = None  # None -> 0.5 on the first symbol


@dataclass
class MeasureBlock:
    P: list[list[float]] | None = None  # None -> uniform
    pi: list[float] | None = None


@dataclass
class FunctionalBlock:
    U: list[float] | None = None
    S: list[list[float]] | None = None
    sup_norm: float | None = None


@dataclass
class OutputBlock:
    dir: str = "out"
    formats: list[str] = field(default_factory=lambda: ["json", "csv"])


@dataclass
class ExperimentConfig:
    system: SystemBlock = field(default_factory=SystemBlock)
    subsystem: SystemBlock | None = None
    potential: PotentialBlock = field(default_factory=PotentialBlock)
    measure: MeasureBlock = field(default_factory=MeasureBlock)
    submeasure: MeasureBlock = field(default_factory=MeasureBlock)
    scan: ScanParams = field(default_factory=ScanParams)
    functional: FunctionalBlock = field(default_factory=FunctionalBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # built objects; validated once in parse_config
    def transition_system(self) -> TransitionSystem:
        return TransitionSystem(np.array(self.system.matrix, dtype=bool), tuple(self.system.alphabet))

    def sub_system(self) -> TransitionSystem:
        if self.subsystem is None:
            return self.transition_system()
        return TransitionSystem(np.array(self.subsystem.matrix, dtype=bool), tuple(self.system.alphabet))

    def embedding(self) -> SubshiftEmbedding:
        return SubshiftEmbedding(self.sub_system(), self.transition_system())

    def potential_obj(self) -> Potential:
        T = self.transition_system()
        if self.potential.table is None:
            vals = [0.5 if a == T.active[0] else 0.0 for a in range(T.alphabet_size)]
            return Potential.from_symbol_values(T, vals)
        return Potential(T, self.potential.radius,
                         {T.parse_word(k): v for k, v in self.potential.table.items()})

    def measure_obj(self) -> MarkovMeasure:
        return _build_measure(self.measure, self.transition_system())

    def submeasure_obj(self) -> MarkovMeasure:
        if self.subsystem is None and self.submeasure.P is None:
            return self.measure_obj()
        return _build_measure(self.submeasure, self.sub_system())

    def functional_S(self) -> IntervalSet | None:
        if self.functional.S is None:
            return None
        return IntervalSet(tuple(tuple(iv) for iv in self.functional.S))


def _build_measure(block: MeasureBlock, T: TransitionSystem) -> MarkovMeasure:
    if block.P is None:
        return MarkovMeasure.uniform(T)
    P = np.array(block.P, dtype=float)
    pi = stationary_distribution(P) if block.pi is None else np.array(block.pi, dtype=float)
    return MarkovMeasure(P, pi)


class _Lines:
    """Source line of every node, keyed by dotted path."""

    def __init__(self, text: str):
        self.map: dict[str, int] = {}
        try:
            root = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError("<document>", mark.line + 1 if mark else None, str(exc)) from None
        if root is not None:
            self._walk(root, "")

    def _walk(self, node, path):
        self.map[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{path}.{k.value}" if path else str(k.value)
                self.map.setdefault(key, k.start_mark.line + 1)
                self._walk(v, key)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, f"{path}[{i}]")

    def __call__(self, path: str) -> int | None:
        # nearest recorded ancestor
        while path:
            if path in self.map:
                return self.map[path]
            path = path[:max(path.rfind("."), path.rfind("["), 0)]
        return None


class _Parser:
    def __init__(self, text: str):
        self.lines = _Lines(text)
        try:
            self.data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("<document>", None, str(exc)) from None

    def fail(self, key: str, message: str):
        raise ConfigError(key, self.lines(key), message)

    def mapping(self, obj, key: str, allowed) -> dict:
        if obj is None:
            return {}
        if not isinstance(obj, dict):
            self.fail(key, "expected a mapping")
        for k in obj:
            if k not in allowed:
                self.fail(f"{key}.{k}" if key else str(k), f"unknown key; allowed: {sorted(map(str, allowed))}")
        return obj

    def number(self, v, key: str) -> float:
        if isinstance(v, bool):
            self.fail(key, "expected a number")
        if isinstance(v, (int, float)):
            return float(v)
        if isinstance(v, str):
            try:
                return float(Fraction(v.strip()))
            except (ValueError, ZeroDivisionError):
                pass
        self.fail(key, f"expected a number or rational string, got {v!r}")

    def integer(self, v, key: str, lo: int | None = None) -> int:
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(key, f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            self.fail(key, f"must be >= {lo}")
        return v

    def rows(self, v, key: str, n: int, kind) -> list[list]:
        if not isinstance(v, list) or len(v) != n:
            self.fail(key, f"expected {n} rows")
        out = []
        for i, row in enumerate(v):
            k = f"{key}[{i}]"
            if not isinstance(row, list) or len(row) != n:
                got = len(row) if isinstance(row, list) else type(row).__name__
                self.fail(k, f"row {i + 1} has length {got}, expected {n}")
            out.append([kind(x, f"{k}[{j}]") for j, x in enumerate(row)])
        return out

    def bit(self, v, key):
        if v not in (0, 1) or isinstance(v, float):
            self.fail(key, f"transition entries must be 0 or 1, got {v!r}")
        return int(v)

    def system(self, obj, key: str, alphabet=None) -> SystemBlock:
        allowed = {"matrix"} if alphabet is not None else {"alphabet", "matrix"}
        obj = self.mapping(obj, key, allowed)
        if alphabet is None:
            alphabet = obj.get("alphabet")
            if alphabet is None:
                n = len(obj["matrix"]) if isinstance(obj.get("matrix"), list) else 2
                alphabet = [str(i + 1) for i in range(n)]
            elif isinstance(alphabet, int) and not isinstance(alphabet, bool):
                alphabet = [str(i + 1) for i in range(self.integer(alphabet, f"{key}.alphabet", 1))]
            elif isinstance(alphabet, list):
                alphabet = [str(a) for a in alphabet]
                if len(set(alphabet)) != len(alphabet) or not alphabet:
                    self.fail(f"{key}.alphabet", "labels must be distinct and nonempty")
            else:
                self.fail(f"{key}.alphabet", "expected a list of labels or an integer")
        if "matrix" not in obj:
            if key != "system":
                self.fail(key, "matrix is required")
            return SystemBlock()
        matrix = self.rows(obj["matrix"], f"{key}.matrix", len(alphabet), self.bit)
        return SystemBlock(list(alphabet), matrix)

    def measure(self, obj, key: str, n: int) -> MeasureBlock:
        obj = self.mapping(obj, key, {"P", "pi"})
        P = obj.get("P")
        if P is None or P == "uniform":
            if obj.get("pi") is not None:
                self.fail(f"{key}.pi", "pi given without P")
            return MeasureBlock()
        P = self.rows(P, f"{key}.P", n, self.number)
        for i, row in enumerate(P):
            s = sum(row)
            if any(x < 0 for x in row):
                self.fail(f"{key}.P[{i}]", "negative probability")
            if s != 0 and abs(s - 1) > 1e-12:
                self.fail(f"{key}.P[{i}]", f"row {i + 1} sums to {s!r}; rows must be stochastic")
        pi = obj.get("pi")
        if pi is not None:
            if not isinstance(pi, list) or len(pi) != n:
                self.fail(f"{key}.pi", f"expected {n} entries")
            pi = [self.number(x, f"{key}.pi[{j}]") for j, x in enumerate(pi)]
        return MeasureBlock(P, pi)


def parse_config(text: str) -> ExperimentConfig:
    p = _Parser(text)
    top = p.mapping(p.data, "", {f.name for f in fields(ExperimentConfig)})
    system = p.system(top.get("system"), "system")
    n = len(system.alphabet)
    sub = None
    if top.get("subsystem") is not None:
        sub = p.system(top["subsystem"], "subsystem", alphabet=system.alphabet)

    pobj = p.mapping(top.get("potential"), "potential", {"radius", "values", "table"})
    radius = p.integer(pobj.get("radius", 0), "potential.radius", 0)
    if "values" in pobj and "table" in pobj:
        p.fail("potential", "give either values or table, not both")
    table = None
    if "values" in pobj:
        if radius != 0:
            p.fail("potential.values", "values shorthand needs radius 0")
        vals = p.mapping(pobj["values"], "potential.values", {*system.alphabet, *range(1, n + 1)})
        table = {str(k): p.number(v, f"potential.values.{k}") for k, v in vals.items()}
    elif "table" in pobj:
        tab = pobj["table"]
        if not isinstance(tab, dict):
            p.fail("potential.table", "expected a mapping from window words to values")
        table = {str(k): p.number(v, f"potential.table.{k}") for k, v in tab.items()}

    measure = p.measure(top.get("measure"), "measure", n)
    submeasure = p.measure(top.get("submeasure"), "submeasure", n)

    sobj = p.mapping(top.get("scan"), "scan", {f.name for f in fields(ScanParams)})
    scan = ScanParams()
    for f in fields(ScanParams):
        if f.name not in sobj or sobj[f.name] is None:
            continue
        key = f"scan.{f.name}"
        if f.name in ("grid_count", "n_steps", "n_samples", "max_period"):
            setattr(scan, f.name, p.integer(sobj[f.name], key, 1))
        elif f.name == "seed":
            setattr(scan, f.name, p.integer(sobj[f.name], key, 0))
        else:
            setattr(scan, f.name, p.number(sobj[f.name], key))
    if scan.theta <= 0:
        p.fail("scan.theta", "theta must be positive")

    fobj = p.mapping(top.get("functional"), "functional", {"U", "S", "sup_norm"})
    functional = FunctionalBlock()
    if fobj.get("U") is not None:
        functional.U = [p.number(x, f"functional.U[{i}]") for i, x in enumerate(fobj["U"])]
    if fobj.get("S") is not None:
        S = []
        for i, iv in enumerate(fobj["S"]):
            if not isinstance(iv, list) or len(iv) != 2:
                p.fail(f"functional.S[{i}]", "intervals are [lo, hi] pairs")
            S.append([p.number(x, f"functional.S[{i}]") for x in iv])
        functional.S = S
    if fobj.get("sup_norm") is not None:
        functional.sup_norm = p.number(fobj["sup_norm"], "functional.sup_norm")

    oobj = p.mapping(top.get("output"), "output", {"dir", "formats"})
    output = OutputBlock()
    if "dir" in oobj:
        output.dir = str(oobj["dir"])
    if "formats" in oobj:
        fm = oobj["formats"]
        if not isinstance(fm, list) or not set(fm) <= {"json", "csv"}:
            p.fail("output.formats", "formats is a list drawn from json, csv")
        output.formats = list(fm)

    cfg = ExperimentConfig(system, sub, PotentialBlock(radius, table), measure, submeasure,
                           scan, functional, output)
    _validate_objects(cfg, p)
    return cfg


def _validate_objects(cfg: ExperimentConfig, p: _Parser):
    """Build every object once so that semantic errors surface at parse time."""
    try:
        T = cfg.transition_system()
    except (SymbolError, ValueError) as exc:
        p.fail("system.matrix", str(exc))
    if T.is_empty:
        p.fail("system.matrix", "the subshift is empty")
    if cfg.subsystem is not None:
        if not is_sub_embedding(cfg.embedding()):
            p.fail("subsystem.matrix", "subsystem must be nonempty and allow only transitions of system")
    try:
        cfg.potential_obj()
    except (SymbolError, ValueError) as exc:
        p.fail("potential", str(exc))
    for key, build, system in (("measure", cfg.measure_obj, T),
                               ("submeasure", cfg.submeasure_obj, cfg.sub_system())):
        try:
            mu = build()
            validate_measure(mu, system)
        except MeasureError as exc:
            p.fail(key, str(exc))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", None, f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
