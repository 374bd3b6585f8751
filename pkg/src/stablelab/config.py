"""Experiment config files: INI sections, one experiment each.

Example::

    [bench]
    kind = stability
    class = threshold:7@64
    distribution = median:64
    learner = rts
    epsilon = 0.2
    trials = 2000
    seed = 11
    checks =
        best_frequency >= 0.03125

Class specs: ``threshold:N``, ``threshold:N@M``, ``cube:N``,
``explicit:BITS,BITS,...``, ``random:N:SIZE:SEED``, ``file:PATH``.

Distribution specs: ``median:M``, ``uniform:X/Y,X/Y,...``,
``atoms:X/Y/P,...``, ``point:X:Y``, ``file:PATH``.

Learner specs: ``rts``, ``erm``, ``const:BITS``, ``three_way:<learner>``.
"""

from __future__ import annotations

import configparser
import hashlib
import operator
from dataclasses import dataclass, field
from pathlib import Path

from stablelab.core import (
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    full_cube,
    median_threshold_distribution,
    random_class,
    threshold_class,
)
from stablelab.learners import ERM, ConstantLearner, Learner, RandomThresholdStable, ThreeWayRule

KINDS = ("dims", "stability", "listrep", "boost", "reduction", "jumpprobe")
MAX_SEED = (1 << 64) - 1


class ConfigError(ValueError):
    """A config field is missing or malformed."""

    def __init__(self, section: str, field_name: str, reason: str):
        super().__init__(f"[{section}] {field_name}: {reason}")
        self.section = section
        self.field = field_name
        self.reason = reason

    def as_dict(self) -> dict:
        return {"error": "config", "section": self.section, "field": self.field, "reason": self.reason}


_OPS = {
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
    "==": operator.eq,
    "!=": operator.ne,
}


@dataclass(frozen=True)
class Check:
    metric: str
    op: str
    target: float

    def evaluate(self, value) -> bool:
        return bool(_OPS[self.op](float(value), self.target))

    def __str__(self):
        return f"{self.metric} {self.op} {self.target:.12g}"


@dataclass
class ExperimentConfig:
    """One section of a config file, with typed accessors that name bad fields."""

    experiment_id: str
    kind: str
    fields: dict[str, str]
    base_dir: Path = field(default_factory=Path.cwd)
    seed_override: int | None = None

    def _err(self, name, reason):
        return ConfigError(self.experiment_id, name, reason)

    def has(self, name) -> bool:
        return name in self.fields

    def text(self, name, default=None) -> str:
        if name in self.fields:
            return self.fields[name].strip()
        if default is None:
            raise self._err(name, "missing")
        return default

    def integer(self, name, default=None, minimum=None) -> int:
        raw = self.text(name, None if default is None else str(default))
        try:
            value = int(raw)
        except ValueError:
            raise self._err(name, f"expected an integer, got {raw!r}") from None
        if minimum is not None and value < minimum:
            raise self._err(name, f"must be at least {minimum}, got {value}")
        return value

    def real(self, name, default=None, low=None, high=None, low_open=True, high_open=True) -> float:
        raw = self.text(name, None if default is None else repr(default))
        try:
            value = float(raw)
        except ValueError:
            raise self._err(name, f"expected a number, got {raw!r}") from None
        if low is not None and (value < low or (low_open and value == low)):
            raise self._err(name, f"out of range: {value}")
        if high is not None and (value > high or (high_open and value == high)):
            raise self._err(name, f"out of range: {value}")
        return value

    def integers(self, name) -> list[int]:
        raw = self.text(name)
        try:
            values = [int(v) for v in raw.replace(",", " ").split()]
        except ValueError:
            raise self._err(name, f"expected a list of integers, got {raw!r}") from None
        if not values:
            raise self._err(name, "empty list")
        return values

    @property
    def trials(self) -> int:
        return self.integer("trials", minimum=1)

    @property
    def seed(self) -> int:
        if self.seed_override is not None:
            return self.seed_override
        value = self.integer("seed", default=0, minimum=0)
        if value > MAX_SEED:
            raise self._err("seed", "does not fit in 64 bits")
        return value

    @property
    def epsilon(self) -> float:
        return self.real("epsilon", low=0.0, high=1.0)

    def path(self, raw: str) -> Path:
        p = Path(raw)
        return p if p.is_absolute() else self.base_dir / p

    def hypothesis_class(self, name="class") -> HypothesisClass:
        spec = self.text(name)
        try:
            return parse_class(spec, self.path)
        except (ValueError, OSError) as exc:
            raise self._err(name, str(exc)) from None

    def distribution(self, domain_size: int, name="distribution") -> FiniteDistribution:
        spec = self.text(name)
        try:
            D = parse_distribution(spec, domain_size, self.path)
        except (ValueError, OSError) as exc:
            raise self._err(name, str(exc)) from None
        if D.domain_size != domain_size:
            raise self._err(name, f"domain size {D.domain_size} differs from the class's {domain_size}")
        return D

    def learner(self, H: HypothesisClass, epsilon: float | None, name="learner") -> Learner:
        spec = self.text(name, "rts")
        try:
            return parse_learner(spec, H, epsilon)
        except ValueError as exc:
            raise self._err(name, str(exc)) from None

    def checks(self) -> list[Check]:
        out = []
        for line in self.text("checks", "").splitlines():
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3 or parts[1] not in _OPS:
                raise self._err("checks", f"expected 'metric op value', got {line!r}")
            try:
                target = _parse_value(parts[2])
            except ValueError:
                raise self._err("checks", f"bad target in {line!r}") from None
            out.append(Check(parts[0], parts[1], target))
        return out

    def fingerprint(self) -> str:
        body = "\n".join(f"{k}={self.fields[k].strip()}" for k in sorted(self.fields))
        body += f"\nseed_override={self.seed_override}"
        return hashlib.sha256(f"[{self.experiment_id}]\n{body}".encode()).hexdigest()


def _parse_value(raw: str) -> float:
    low = raw.lower()
    if low == "true":
        return 1.0
    if low == "false":
        return 0.0
    return float(raw)


def parse_class(spec: str, resolve=Path) -> HypothesisClass:
    kind, _, rest = spec.partition(":")
    if kind == "threshold":
        n, _, m = rest.partition("@")
        return threshold_class(int(n), int(m) if m else None)
    if kind == "cube":
        return full_cube(int(rest))
    if kind == "explicit":
        strings = [s for s in rest.replace(",", " ").split()]
        return HypothesisClass.from_strings(strings)
    if kind == "random":
        n, size, seed = (int(v) for v in rest.split(":"))
        return random_class(n, size, seed)
    if kind == "file":
        return HypothesisClass.load(resolve(rest))
    raise ValueError(f"unknown class spec {spec!r}")


def parse_distribution(spec: str, domain_size: int, resolve=Path) -> FiniteDistribution:
    kind, _, rest = spec.partition(":")
    if kind == "median":
        return median_threshold_distribution(int(rest))
    if kind == "uniform":
        exs = [tuple(int(v) for v in tok.split("/")) for tok in rest.replace(",", " ").split()]
        return FiniteDistribution.uniform(domain_size, exs)
    if kind == "atoms":
        atoms = []
        for tok in rest.replace(",", " ").split():
            x, y, p = tok.split("/")
            atoms.append(((int(x), int(y)), float(p)))
        return FiniteDistribution(domain_size, atoms)
    if kind == "point":
        x, y = rest.split(":")
        return FiniteDistribution.point_mass(domain_size, int(x), int(y))
    if kind == "file":
        return FiniteDistribution.load(resolve(rest), domain_size)
    raise ValueError(f"unknown distribution spec {spec!r}")


def parse_learner(spec: str, H: HypothesisClass, epsilon: float | None) -> Learner:
    kind, _, rest = spec.partition(":")
    if kind == "rts":
        eps = float(rest) if rest else epsilon
        if eps is None:
            raise ValueError("rts needs an epsilon")
        return RandomThresholdStable(H, eps)
    if kind == "erm":
        return ERM(H)
    if kind == "const":
        h = Hypothesis.from_string(rest)
        if h.domain_size != H.domain_size:
            raise ValueError("constant hypothesis has the wrong domain size")
        return ConstantLearner(h)
    if kind == "three_way":
        return ThreeWayRule(parse_learner(rest or "erm", H, epsilon))
    raise ValueError(f"unknown learner spec {spec!r}")


def load_config(path, seed_override: int | None = None) -> list[ExperimentConfig]:
    """Parse every section of an INI file into an ``ExperimentConfig``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("-", "config", f"file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError("-", "config", str(exc).splitlines()[0]) from None
    out = []
    for name in parser.sections():
        fields = dict(parser[name])
        kind = fields.get("kind", "").strip()
        if kind not in KINDS:
            raise ConfigError(name, "kind", f"expected one of {', '.join(KINDS)}, got {kind!r}")
        out.append(ExperimentConfig(name, kind, fields, path.parent.resolve(), seed_override))
    if not out:
        raise ConfigError("-", "config", "no experiment sections")
    return out
