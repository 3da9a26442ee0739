"""Scenario files, policy-comparison sweeps and CSV output.

A scenario file is INI-style text::

    [scenario]
    name = my-run
    sweep = 4, 8, 12
    alpha = 0.5            ; or: m = 2
    horizon = 100000
    warmup = 10000         ; optional, default 10% of horizon
    replications = 30
    seed = 0
    policies = WIP_AOII, WIP_AOI
    common_random_numbers = true
    tie_rule = lowest_id

    [class fast]
    p = 0.9
    d = 5
    rho = 0.5
    proportion = 0.5       ; optional, default equal split

Every ``[class ...]`` section adds one user class, in file order.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import re
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .closed_forms import whittle_aoi, whittle_aoii
from .core import SourceParams
from .policies import PolicyKind
from .simulator import SimConfig, estimate_cost

CSV_HEADER = ("scenario", "policy", "N", "M", "replication", "seed", "avg_cost")
DEFAULT_SWEEP = tuple(range(4, 41, 4))


class ScenarioError(ValueError):
    """Malformed or invalid scenario; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("\n".join(self.problems))


@dataclass
class Scenario:
    name: str
    classes: list
    sweep: tuple = DEFAULT_SWEEP
    alpha: float | None = 0.5
    M: int | None = None
    horizon: int = 100_000
    warmup: int | None = None
    replications: int = 30
    policies: tuple = (PolicyKind.WIP_AOII, PolicyKind.WIP_AOI)
    seed: int = 0
    common_random_numbers: bool = True
    tie_rule: str = "lowest_id"

    def problems(self):
        out = []
        if not self.sweep:
            out.append("sweep must list at least one N")
        if not self.policies:
            out.append("at least one policy is required")
        if self.replications < 1:
            out.append(f"replications must be >= 1, got {self.replications}")
        if self.seed < 0 or self.seed >= 2**64:
            out.append(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        for N in self.sweep:
            try:
                self.config(N)
            except (ValueError, TypeError) as exc:
                problems = getattr(exc, "problems", [str(exc)])
                out.extend(f"N={N}: {p}" for p in problems)
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ScenarioError(problems)
        return self

    def config(self, N: int) -> SimConfig:
        return SimConfig(self.classes, N, M=self.M, alpha=None if self.M is not None else self.alpha,
                         horizon=self.horizon, warmup=self.warmup, seed=self.seed,
                         common_random_numbers=self.common_random_numbers, tie_rule=self.tie_rule)

    def metadata(self):
        meta = asdict(self)
        meta["classes"] = [dict(asdict(c), proportion=w) for c, w in self.classes]
        meta["policies"] = [PolicyKind(p).value for p in self.policies]
        meta["sweep"] = list(self.sweep)
        meta["warmup"] = self.warmup if self.warmup is not None else self.horizon // 10
        meta["channels"] = {str(N): self.config(N).channels for N in self.sweep}
        return meta


def _two_classes(first, second):
    return [(SourceParams(**first), 0.5), (SourceParams(**second), 0.5)]


BUILTIN = {
    "paper-scenario-1": Scenario(
        "paper-scenario-1",
        _two_classes(dict(p=0.1, d=5.0, rho=0.5), dict(p=0.9, d=5.0, rho=0.5)),
        policies=(PolicyKind.WIP_AOII, PolicyKind.WIP_AOI),
    ),
    "paper-scenario-2": Scenario(
        "paper-scenario-2",
        _two_classes(dict(p=0.5, d=1.0, rho=0.5), dict(p=0.5, d=100.0, rho=0.5)),
        policies=(PolicyKind.WIP_AOII, PolicyKind.WWIP_AOI),
    ),
}


def _key_lines(text):
    # (section, key) -> 1-based line number, for error messages
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
        elif section and (m := re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", line)):
            lines[(section, m.group(1).strip().lower())] = no
    return lines


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; raises :class:`ScenarioError` naming the line or field at fault."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(f"{source}: parse error: {exc}") from None
    where = _key_lines(text)
    problems = []

    def field_value(section, key, conv, default=None, required=False):
        sec = parser[section]
        if key not in sec:
            if required:
                problems.append(f"{source}: [{section}] missing required field '{key}'")
            return default
        raw = sec[key]
        try:
            return conv(raw)
        except ValueError:
            line = where.get((section, key))
            at = f" (line {line})" if line else ""
            problems.append(f"{source}{at}: [{section}] {key}: cannot parse {raw!r}")
            return default

    def int_list(raw):
        return tuple(int(x) for x in raw.replace(",", " ").split())

    def policy_list(raw):
        return tuple(PolicyKind(x.strip().upper()) for x in raw.split(",") if x.strip())

    def boolean(raw):
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)

    if "scenario" not in parser:
        raise ScenarioError(f"{source}: missing [scenario] section")
    s = "scenario"
    name = parser[s].get("name", Path(source).stem)
    sweep = field_value(s, "sweep", int_list, DEFAULT_SWEEP)
    M = field_value(s, "m", int)
    alpha = field_value(s, "alpha", float, None if M is not None else 0.5)
    horizon = field_value(s, "horizon", int, 100_000)
    warmup = field_value(s, "warmup", int)
    reps = field_value(s, "replications", int, 30)
    seed = field_value(s, "seed", int, 0)
    policies = field_value(s, "policies", policy_list, required=True)
    crn = field_value(s, "common_random_numbers", boolean, True)
    tie = parser[s].get("tie_rule", "lowest_id").strip()

    classes, weights = [], []
    for sec in parser.sections():
        if not sec.lower().startswith("class"):
            if sec != "scenario":
                problems.append(f"{source}: unknown section [{sec}]")
            continue
        vals = {k: field_value(sec, k, float, required=True) for k in ("p", "d", "rho")}
        weights.append(field_value(sec, "proportion", float))
        if None in vals.values():
            continue
        try:
            classes.append(SourceParams(**vals))
        except ValueError as exc:
            problems.append(f"{source}: [{sec}] {exc}")
    if not classes and not problems:
        problems.append(f"{source}: at least one [class ...] section is required")
    if problems:
        raise ScenarioError(problems)

    if all(w is None for w in weights):
        weights = [1.0 / len(classes)] * len(classes)
    elif any(w is None for w in weights):
        raise ScenarioError(f"{source}: give a proportion for every class or for none")
    scenario = Scenario(name, list(zip(classes, weights)), sweep=sweep, alpha=None if M is not None else alpha,
                        M=M, horizon=horizon, warmup=warmup, replications=reps, policies=policies,
                        seed=seed, common_random_numbers=crn, tie_rule=tie)
    return scenario.validate()


def load_scenario(name: str) -> Scenario:
    """Built-in scenario name or path to a scenario file."""
    if name in BUILTIN:
        return replace(BUILTIN[name])
    path = Path(name)
    if not path.is_file():
        raise ScenarioError(f"no built-in scenario or file named {name!r}; built-ins: {sorted(BUILTIN)}")
    return parse_scenario(path.read_text(), source=str(path))


def run_scenario(scenario: Scenario):
    """Detail rows ``(N, policy, replication)`` followed by mean/stderr summary rows."""
    scenario.validate()
    detail, summary = [], []
    for N in sorted(scenario.sweep):
        cfg = scenario.config(N)
        for kind in scenario.policies:
            kind = PolicyKind(kind)
            res = estimate_cost(cfg, kind, scenario.replications)
            for r, (seed, cost) in enumerate(zip(res.seeds, res.costs)):
                detail.append((scenario.name, kind.value, N, cfg.channels, r, seed, float(cost)))
            summary.append((scenario.name, kind.value, N, cfg.channels, "mean", scenario.seed, res.avg_cost))
            summary.append((scenario.name, kind.value, N, cfg.channels, "stderr", scenario.seed, res.stderr))
    return detail + summary


def index_rows(params: SourceParams, n_max: int, n_min: int = 0):
    if n_max < n_min:
        raise ValueError("empty n range")
    ns = np.arange(n_min, n_max + 1)
    w_aoi = np.atleast_1d(whittle_aoi(ns, params.rho))
    w_aoii = np.atleast_1d(whittle_aoii(ns, params))
    return [(int(n), float(a), float(b)) for n, a, b in zip(ns, w_aoi, w_aoii)]


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(rows, header=CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_metadata(scenario: Scenario, path):
    Path(path).write_text(json.dumps(scenario.metadata(), indent=2, sort_keys=True) + "\n")
