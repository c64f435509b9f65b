"""Conditional algorithm/hyperparameter search spaces.

A :class:`ConfigSpace` is a root categorical "algorithm" hyperparameter plus
an ordered list of hyperparameters, each optionally conditioned on the value
of one unconditioned parent (usually the algorithm selector).  Configurations
hold exactly the active hyperparameters.

Numeric encoding (used by the surrogates): categorical hyperparameters are
one-hot, numeric ones are min-max scaled to ``[0, 1]`` (in log space when
flagged), and every slot owned by an inactive hyperparameter is ``-1``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from .errors import ValidationError

INACTIVE = -1.0
LOCAL_SIGMA = 0.2
LOCAL_TOP_K = 10

_KINDS = ("continuous", "integer", "categorical")


@dataclass(frozen=True)
class HyperparameterDef:
    """One hyperparameter of the joint space.

    ``condition`` is ``(parent_name, required_value)`` or ``None`` for a
    globally active hyperparameter.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    log: bool = False
    choices: tuple = ()
    condition: tuple[str, Any] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if len(self.choices) == 0:
                raise ValidationError(f"{self.name}: empty choice list")
            if len(set(self.choices)) != len(self.choices):
                raise ValidationError(f"{self.name}: duplicate choices")
            if self.log:
                raise ValidationError(f"{self.name}: categorical cannot be log-scaled")
        else:
            if self.lower is None or self.upper is None or not self.lower < self.upper:
                raise ValidationError(f"{self.name}: need lower < upper")
            if self.log and self.kind != "continuous":
                raise ValidationError(f"{self.name}: log scale only for continuous")
            if self.log and self.lower <= 0:
                raise ValidationError(f"{self.name}: log scale requires lower > 0")
            if self.kind == "integer" and (
                int(self.lower) != self.lower or int(self.upper) != self.upper
            ):
                raise ValidationError(f"{self.name}: integer bounds must be integral")

    @property
    def width(self) -> int:
        return len(self.choices) if self.kind == "categorical" else 1

    def sample(self, rng: np.random.Generator):
        if self.kind == "categorical":
            return self.choices[int(rng.integers(len(self.choices)))]
        if self.kind == "integer":
            return int(rng.integers(int(self.lower), int(self.upper) + 1))
        if self.log:
            lo, hi = math.log(self.lower), math.log(self.upper)
            return float(math.exp(rng.uniform(lo, hi)))
        return float(rng.uniform(self.lower, self.upper))

    def to_unit(self, value) -> float:
        if self.log:
            lo, hi = math.log(self.lower), math.log(self.upper)
            return (math.log(value) - lo) / (hi - lo)
        return (value - self.lower) / (self.upper - self.lower)

    def from_unit(self, u: float):
        u = min(max(u, 0.0), 1.0)
        if self.log:
            lo, hi = math.log(self.lower), math.log(self.upper)
            value = math.exp(lo + u * (hi - lo))
            return float(min(max(value, self.lower), self.upper))
        value = self.lower + u * (self.upper - self.lower)
        if self.kind == "integer":
            return int(round(value))
        return float(value)

    def check(self, value) -> None:
        if self.kind == "categorical":
            if value not in self.choices:
                raise ValidationError(f"{self.name}={value!r} not in {self.choices}")
            return
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            raise ValidationError(f"{self.name}={value!r} is not numeric")
        if not math.isfinite(value) or value < self.lower or value > self.upper:
            raise ValidationError(
                f"{self.name}={value!r} outside [{self.lower}, {self.upper}]"
            )
        if self.kind == "integer" and int(value) != value:
            raise ValidationError(f"{self.name}={value!r} is not an integer")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind}
        if self.kind == "categorical":
            out["choices"] = list(self.choices)
        else:
            out["bounds"] = [self.lower, self.upper]
            if self.log:
                out["log"] = True
        if self.condition is not None:
            out["condition"] = {"parent": self.condition[0], "value": self.condition[1]}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "HyperparameterDef":
        cond = d.get("condition")
        if isinstance(cond, Mapping):
            cond = (cond["parent"], cond["value"])
        elif cond is not None:
            cond = tuple(cond)
        lower, upper = d.get("lower"), d.get("upper")
        if "bounds" in d:
            lower, upper = d["bounds"]
        return cls(
            name=d["name"],
            kind=d["kind"],
            lower=lower,
            upper=upper,
            log=bool(d.get("log", False)),
            choices=tuple(d.get("choices", ())),
            condition=cond,
        )


def continuous(name, lower, upper, log=False, condition=None) -> HyperparameterDef:
    return HyperparameterDef(name, "continuous", float(lower), float(upper), log, (), condition)


def integer(name, lower, upper, condition=None) -> HyperparameterDef:
    return HyperparameterDef(name, "integer", int(lower), int(upper), False, (), condition)


def categorical(name, choices, condition=None) -> HyperparameterDef:
    return HyperparameterDef(name, "categorical", None, None, False, tuple(choices), condition)


class Configuration(Mapping):
    """Immutable mapping of active hyperparameter names to values."""

    __slots__ = ("_values", "_hash")

    def __init__(self, values: Mapping[str, Any]):
        self._values = dict(values)
        self._hash = None

    def __getitem__(self, key):
        return self._values[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def get(self, key, default=None):
        return self._values.get(key, default)

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other):
        if isinstance(other, Configuration):
            return self._values == other._values
        if isinstance(other, Mapping):
            return self._values == dict(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(sorted((k, repr(v)) for k, v in self._values.items())))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._values.items())
        return f"Configuration({inner})"

    def to_dict(self) -> dict:
        return dict(self._values)


@dataclass(frozen=True)
class ConfigSpace:
    """Joint space: a root algorithm selector plus conditional hyperparameters."""

    algorithm: HyperparameterDef
    params: tuple[HyperparameterDef, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if self.algorithm.kind != "categorical":
            raise ValidationError("algorithm selector must be categorical")
        if self.algorithm.condition is not None:
            raise ValidationError("algorithm selector must be unconditioned")
        seen: dict[str, HyperparameterDef] = {self.algorithm.name: self.algorithm}
        for hp in self.params:
            if hp.name in seen:
                raise ValidationError(f"duplicate hyperparameter {hp.name!r}")
            if hp.condition is not None:
                parent_name, value = hp.condition
                parent = seen.get(parent_name)
                if parent is None:
                    raise ValidationError(
                        f"{hp.name}: parent {parent_name!r} must be defined earlier"
                    )
                if parent.condition is not None:
                    raise ValidationError(f"{hp.name}: nested conditions are not supported")
                parent.check(value)
            seen[hp.name] = hp
        object.__setattr__(self, "_by_name", seen)
        offsets, pos = {}, 0
        for hp in self.all_params:
            offsets[hp.name] = pos
            pos += hp.width
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_dim", pos)

    @property
    def all_params(self) -> tuple[HyperparameterDef, ...]:
        return (self.algorithm,) + self.params

    @property
    def algorithms(self) -> tuple:
        return self.algorithm.choices

    @property
    def dim(self) -> int:
        """Width of the numeric encoding."""
        return self._dim

    def __getitem__(self, name: str) -> HyperparameterDef:
        return self._by_name[name]

    def _is_active(self, hp: HyperparameterDef, values: Mapping) -> bool:
        if hp.condition is None:
            return True
        parent, required = hp.condition
        return parent in values and values[parent] == required

    def active_names(self, values: Mapping) -> list[str]:
        return [hp.name for hp in self.all_params if self._is_active(hp, values)]

    def validate(self, config: Mapping) -> Configuration:
        """Return ``config`` as a :class:`Configuration` or raise ValidationError."""
        values = dict(config)
        for name in values:
            if name not in self._by_name:
                raise ValidationError(f"unknown hyperparameter {name!r}")
        for hp in self.all_params:
            active = self._is_active(hp, values)
            if active and hp.name not in values:
                raise ValidationError(f"missing active hyperparameter {hp.name!r}")
            if not active and hp.name in values:
                raise ValidationError(f"inactive hyperparameter {hp.name!r} assigned")
            if active:
                hp.check(values[hp.name])
        if isinstance(config, Configuration):
            return config
        return Configuration(values)

    def make(self, algorithm, **values) -> Configuration:
        """Convenience constructor: ``space.make("knn", **{"knn.k": 3})``."""
        return self.validate({self.algorithm.name: algorithm, **values})

    def _complete(self, values: dict, rng: np.random.Generator) -> Configuration:
        # Assumes parents precede children, which __post_init__ guarantees.
        out = {}
        for hp in self.all_params:
            if not self._is_active(hp, out):
                continue
            out[hp.name] = values[hp.name] if hp.name in values else hp.sample(rng)
        return Configuration(out)

    def encode(self, config: Mapping) -> np.ndarray:
        """Fixed-width float vector; see the module docstring for the layout."""
        config = self.validate(config)
        vec = np.full(self._dim, INACTIVE)
        self._encode_into(config, vec)
        return vec

    def _encode_into(self, config: Mapping, vec: np.ndarray) -> None:
        for hp in self.all_params:
            if hp.name not in config:
                continue
            pos = self._offsets[hp.name]
            value = config[hp.name]
            if hp.kind == "categorical":
                vec[pos : pos + hp.width] = 0.0
                vec[pos + hp.choices.index(value)] = 1.0
            else:
                vec[pos] = hp.to_unit(value)

    def encode_many(self, configs: Sequence[Mapping], validate: bool = True) -> np.ndarray:
        """Stacked encodings; pass ``validate=False`` for configurations sampled from this space."""
        if validate:
            configs = [self.validate(c) for c in configs]
        out = np.full((len(configs), self._dim), INACTIVE)
        if not configs:
            return out
        for hp in self.all_params:
            pos = self._offsets[hp.name]
            values = [c.get(hp.name) for c in configs]
            rows = np.array([i for i, v in enumerate(values) if v is not None], dtype=np.int64)
            if rows.size == 0:
                continue
            present = [values[i] for i in rows]
            if hp.kind == "categorical":
                lookup = {c: k for k, c in enumerate(hp.choices)}
                cols = np.array([lookup[v] for v in present], dtype=np.int64)
                out[rows, pos : pos + hp.width] = 0.0
                out[rows, pos + cols] = 1.0
            else:
                v = np.asarray(present, dtype=np.float64)
                if hp.log:
                    lo, hi = math.log(hp.lower), math.log(hp.upper)
                    out[rows, pos] = (np.log(v) - lo) / (hi - lo)
                else:
                    out[rows, pos] = (v - hp.lower) / (hp.upper - hp.lower)
        return out

    def to_dict(self) -> dict:
        return {
            "algorithm": {"name": self.algorithm.name, "choices": list(self.algorithm.choices)},
            "params": [hp.to_dict() for hp in self.params],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ConfigSpace":
        algo = d["algorithm"]
        return cls(
            categorical(algo.get("name", "algorithm"), algo["choices"]),
            tuple(HyperparameterDef.from_dict(p) for p in d.get("params", ())),
        )


def load_space(path: str | Path) -> ConfigSpace:
    """Read a space definition from a JSON or YAML file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    return ConfigSpace.from_dict(data)


def save_space(space: ConfigSpace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(space.to_dict(), indent=2))


class CandidateBatch:
    """Columnar block of configurations, encoded without building mappings.

    ``raw[name]`` holds one draw per row (choice indices for categoricals)
    and ``active[name]`` marks the rows where that hyperparameter is active.
    """

    def __init__(self, space: ConfigSpace, raw: dict, active: dict):
        self.space = space
        self.raw = raw
        self.active = active
        self.n = len(next(iter(raw.values())))

    def __len__(self) -> int:
        return self.n

    def config(self, i: int) -> Configuration:
        values = {}
        for hp in self.space.all_params:
            if self.active[hp.name][i]:
                v = self.raw[hp.name][i]
                if hp.kind == "categorical":
                    values[hp.name] = hp.choices[int(v)]
                elif hp.kind == "integer":
                    values[hp.name] = int(v)
                else:
                    values[hp.name] = float(v)
        return Configuration(values)

    def configs(self) -> list[Configuration]:
        return [self.config(i) for i in range(self.n)]

    def encode(self) -> np.ndarray:
        space = self.space
        out = np.full((self.n, space.dim), INACTIVE)
        for hp in space.all_params:
            pos = space._offsets[hp.name]
            rows = np.flatnonzero(self.active[hp.name])
            v = self.raw[hp.name][rows]
            if hp.kind == "categorical":
                out[rows, pos : pos + hp.width] = 0.0
                out[rows, pos + v.astype(np.int64)] = 1.0
            elif hp.log:
                lo, hi = math.log(hp.lower), math.log(hp.upper)
                out[rows, pos] = (np.log(v) - lo) / (hi - lo)
            else:
                out[rows, pos] = (v - hp.lower) / (hp.upper - hp.lower)
        return out


def uniform_batch(space: ConfigSpace, n: int, seed) -> CandidateBatch:
    """Draw ``n`` configurations uniformly (log-uniformly where flagged).

    Every hyperparameter gets a column of ``n`` draws, in declaration order;
    each row keeps the entries active under its own selector values.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    raw, active = {}, {}
    for hp in space.all_params:
        if hp.kind == "categorical":
            col = rng.integers(len(hp.choices), size=n)
        elif hp.kind == "integer":
            col = rng.integers(int(hp.lower), int(hp.upper) + 1, size=n)
        elif hp.log:
            lo, hi = math.log(hp.lower), math.log(hp.upper)
            col = np.clip(np.exp(rng.uniform(lo, hi, n)), hp.lower, hp.upper)
        else:
            col = rng.uniform(hp.lower, hp.upper, n)
        raw[hp.name] = col
        if hp.condition is None:
            active[hp.name] = np.ones(n, dtype=bool)
        else:
            parent, value = hp.condition
            p = space[parent]
            code = p.choices.index(value) if p.kind == "categorical" else value
            active[hp.name] = active[parent] & (raw[parent] == code)
    return CandidateBatch(space, raw, active)


def sample_uniform(space: ConfigSpace, n: int, seed) -> list[Configuration]:
    """``n`` uniform configurations; see :func:`uniform_batch`."""
    return uniform_batch(space, n, seed).configs()


def sample_local(
    space: ConfigSpace,
    anchors: Sequence[tuple[Mapping, float]],
    n: int,
    seed,
    top_k: int = LOCAL_TOP_K,
    sigma: float = LOCAL_SIGMA,
) -> list[Configuration]:
    """One-hyperparameter mutations of the best anchors.

    Anchors are ``(configuration, error)`` pairs; the ``top_k`` lowest errors
    are used round-robin.  Numeric mutations are Gaussian in the unit-scaled
    space with standard deviation ``sigma`` and clipped to bounds.
    """
    if len(anchors) == 0:
        raise ValidationError("sample_local needs at least one anchor")
    order = sorted(range(len(anchors)), key=lambda i: anchors[i][1])[:top_k]
    best = [space.validate(anchors[i][0]) for i in order]
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        anchor = best[i % len(best)]
        names = list(anchor.keys())
        hp = space[names[int(rng.integers(len(names)))]]
        values = anchor.to_dict()
        if hp.kind == "categorical":
            values[hp.name] = hp.sample(rng)
        else:
            u = hp.to_unit(values[hp.name]) + sigma * rng.standard_normal()
            values[hp.name] = hp.from_unit(u)
        # Drop hyperparameters deactivated by the mutation; fill newly active ones.
        kept = {}
        for p in space.all_params:
            if space._is_active(p, kept) and p.name in values:
                kept[p.name] = values[p.name]
        out.append(space._complete(kept, rng))
    return out
