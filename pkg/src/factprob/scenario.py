"""Scenario files: one JSON document per experiment.

Layout::

    {"kind": "semint-run", "seed": 42,
     "phenomenon": {"type": "urn", "painting": {"seed": 7, "colour_counts": {"1": 10, ...}}},
     "params": {"N": 10000, "window": null}}

Validation walks the document with explicit field paths so that a bad value
is reported as e.g. ``params.epsilon: must lie in (0, 1)``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, FactprobError
from .painting import Painting, generate_painting
from .phenomena import (
    Channel,
    DicePhenomenon,
    FinitePhenomenon,
    RandomPhenomenon,
    constant_sampler,
    iid_sampler,
    switching_sampler,
    urn_from_painting,
)

KINDS = (
    "puzzle-coords",
    "puzzle-borders",
    "probability-game",
    "semint-run",
    "lln-check",
    "factualized-lln",
    "laplace-oscillation",
    "compare",
    "pre-tree",
)


# -- parameter blocks -------------------------------------------------------


@dataclass(frozen=True)
class NoParams:
    pass


@dataclass(frozen=True)
class BordersParams:
    replicas: int = 10

    def check(self):
        _require(self.replicas >= 1, "replicas", "must be >= 1")


@dataclass(frozen=True)
class GameParams:
    N: int = 100_000
    schedule: tuple[int, ...] = ()

    def check(self):
        _require(self.N >= 1, "N", "must be >= 1")
        _require(all(1 <= n <= self.N for n in self.schedule), "schedule", "entries must lie in 1..N")


@dataclass(frozen=True)
class SemintParams:
    N: int = 10_000
    window: int | None = None
    inflation: float = 1.5

    def check(self):
        _require(self.N >= 1, "N", "must be >= 1")
        _require(self.window is None or self.window >= 1, "window", "must be >= 1")
        _require(self.inflation >= 1.5, "inflation", "must be >= 1.5")


@dataclass(frozen=True)
class LLNParams:
    epsilon: float = 0.05
    delta: float = 0.05
    M: int = 1000
    N: int = 2000
    label: Any = None
    schedule: tuple[int, ...] = ()
    window: int | None = None
    inflation: float = 1.5

    def check(self):
        _require(0 < self.epsilon < 1, "epsilon", "must lie in (0, 1)")
        _require(0 < self.delta < 1, "delta", "must lie in (0, 1)")
        _require(self.M >= 1, "M", "must be >= 1")
        _require(self.N >= 1, "N", "must be >= 1")
        _require(self.label is not None, "label", "is required")
        _require(all(n >= 1 for n in self.schedule), "schedule", "entries must be >= 1")
        _require(self.window is None or self.window >= 1, "window", "must be >= 1")
        _require(self.inflation >= 1.5, "inflation", "must be >= 1.5")


@dataclass(frozen=True)
class LaplaceParams:
    rounds_max: int = 3
    N: int = 3000
    level: float = 0.01

    def check(self):
        _require(self.rounds_max >= 1, "rounds_max", "must be >= 1")
        _require(self.N >= 1, "N", "must be >= 1")
        _require(0 < self.level < 1, "level", "must lie in (0, 1)")


@dataclass(frozen=True)
class CompareParams:
    schedule: tuple[int, ...] = (1000, 10_000)
    runs: int = 1
    rounds_max: int = 3
    level: float = 0.01
    window: int | None = None
    inflation: float = 1.5

    def check(self):
        _require(len(self.schedule) >= 1 and all(n >= 1 for n in self.schedule), "schedule",
                 "needs positive entries")
        _require(self.runs >= 1, "runs", "must be >= 1")
        _require(self.rounds_max >= 1, "rounds_max", "must be >= 1")
        _require(0 < self.level < 1, "level", "must lie in (0, 1)")
        _require(self.window is None or self.window >= 1, "window", "must be >= 1")
        _require(self.inflation >= 1.5, "inflation", "must be >= 1.5")


@dataclass(frozen=True)
class PreTreeParams:
    schedule: tuple[int, ...] = (100, 1000, 4000)
    threshold: float = 0.05
    trunk: str = "G"

    def check(self):
        s = self.schedule
        _require(len(s) >= 2, "schedule", "needs at least two checkpoints")
        _require(s[0] >= 1 and all(b > a for a, b in zip(s, s[1:])), "schedule",
                 "must be positive and strictly increasing")
        _require(self.threshold > 0, "threshold", "must be > 0")


PARAMS = {
    "puzzle-coords": NoParams,
    "puzzle-borders": BordersParams,
    "probability-game": GameParams,
    "semint-run": SemintParams,
    "lln-check": LLNParams,
    "factualized-lln": LLNParams,
    "laplace-oscillation": LaplaceParams,
    "compare": CompareParams,
    "pre-tree": PreTreeParams,
}
NEEDS_PAINTING = {"puzzle-coords", "puzzle-borders", "probability-game"}
NEEDS_PHENOMENON = {"semint-run", "lln-check", "factualized-lln", "laplace-oscillation", "compare"}


@dataclass
class Scenario:
    kind: str
    seed: int
    params: Any
    phenomenon: dict | None = None
    painting: dict | None = None
    channels: list | None = None
    name: str = "scenario"
    base_dir: Path = field(default=Path("."), compare=False)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def canonical(self) -> str:
        body = {k: v for k, v in self.raw.items()}
        body["seed"] = self.seed
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def build_painting(self) -> Painting:
        return painting_from_spec(self.painting, "painting", self.base_dir)

    def build_phenomenon(self) -> RandomPhenomenon:
        return phenomenon_from_spec(self.phenomenon, "phenomenon", self.base_dir)

    def build_channels(self) -> list[Channel]:
        return [channel_from_spec(c, f"channels[{i}]") for i, c in enumerate(self.channels)]


# -- validation helpers -----------------------------------------------------


class _Fail(Exception):
    def __init__(self, path, msg):
        self.path, self.msg = path, msg


def _require(ok, path, msg):
    if not ok:
        raise _Fail(path, msg)


def _join(prefix, path):
    return f"{prefix}.{path}" if prefix else path


def _coerce(value, tp, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if tp is Any:
        return value
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path)
    if origin is tuple:
        _require(isinstance(value, list), path, "expected a list")
        return tuple(_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value))
    if tp is bool:
        _require(isinstance(value, bool), path, "expected true/false")
        return value
    if tp is int:
        _require(isinstance(value, int) and not isinstance(value, bool), path, "expected an integer")
        return value
    if tp is float:
        _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "expected a number")
        return float(value)
    if tp is str:
        _require(isinstance(value, str), path, "expected a string")
        return value
    raise TypeError(f"unsupported field type {tp}")


def build_block(cls, data, path):
    """Instantiate a parameter dataclass from a JSON mapping, rejecting unknown keys."""
    data = {} if data is None else data
    _require(isinstance(data, dict), path, "expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        _require(k in names, _join(path, k), "unknown field")
    kwargs = {k: _coerce(v, hints[k], _join(path, k)) for k, v in data.items()}
    obj = cls(**kwargs)
    if hasattr(obj, "check"):
        try:
            obj.check()
        except _Fail as f:
            raise _Fail(_join(path, f.path), f.msg) from None
    return obj


def rational(x, path) -> Fraction:
    try:
        if isinstance(x, bool):
            raise ValueError
        if isinstance(x, float):
            return Fraction(str(x))
        if isinstance(x, (int, str)):
            return Fraction(x)
    except (ValueError, ZeroDivisionError):
        pass
    raise _Fail(path, f"not a rational number: {x!r}")


def _wrap(path, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except _Fail as f:
        raise ConfigError(f.msg, f.path) from None
    except ConfigError as e:
        sub = e.path or ""
        raise ConfigError(e.message, _join(path, sub) if sub else path) from None
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"invalid value ({e})", path) from None


def painting_from_spec(spec, path, base_dir=Path(".")) -> Painting:
    def build():
        _require(isinstance(spec, dict), path, "expected an object")
        if "file" in spec:
            _require(set(spec) == {"file"}, path, "'file' excludes other fields")
            f = Path(spec["file"])
            f = f if f.is_absolute() else base_dir / f
            _require(f.exists(), _join(path, "file"), f"no such file {str(f)!r}")
            try:
                return Painting.load(f)
            except json.JSONDecodeError as e:
                raise _Fail(_join(path, "file"), f"not valid JSON ({e.msg})") from None
        extra = set(spec) - {"seed", "colour_counts", "width", "height"}
        _require(not extra, _join(path, sorted(extra)[0]) if extra else path, "unknown field")
        _require("seed" in spec, _join(path, "seed"), "is required")
        seed = _coerce(spec["seed"], int, _join(path, "seed"))
        cc = spec.get("colour_counts")
        _require(isinstance(cc, dict) and cc, _join(path, "colour_counts"), "expected a non-empty object")
        counts = {}
        for k, v in cc.items():
            p = _join(path, f"colour_counts.{k}")
            try:
                label = int(k)
            except ValueError:
                raise _Fail(p, "colour labels must be integers") from None
            counts[label] = _coerce(v, int, p)
        w = _coerce(spec.get("width", 10), int, _join(path, "width"))
        h = _coerce(spec.get("height", 10), int, _join(path, "height"))
        try:
            return generate_painting(seed, counts, w, h)
        except ConfigError as e:
            raise _Fail(_join(path, e.path) if e.path else _join(path, "colour_counts"), e.message) from None

    return _wrap(path, build)


def phenomenon_from_spec(spec, path, base_dir=Path(".")) -> RandomPhenomenon:
    def build():
        _require(isinstance(spec, dict), path, "expected an object")
        t = spec.get("type")
        body = {k: v for k, v in spec.items() if k != "type"}
        if t == "dice":
            allowed = {"face_weights", "zone", "unit", "orientation_unit", "coupled"}
            for k in body:
                _require(k in allowed, _join(path, k), "unknown field")
            kw = {}
            if "face_weights" in body:
                fw = body["face_weights"]
                _require(isinstance(fw, list) and len(fw) == 6, _join(path, "face_weights"), "expected 6 weights")
                kw["face_weights"] = [rational(x, f"{path}.face_weights[{i}]") for i, x in enumerate(fw)]
                _require(sum(kw["face_weights"]) == 1 and min(kw["face_weights"]) >= 0,
                         _join(path, "face_weights"), "weights must be >= 0 and sum to 1")
            if "zone" in body:
                z = _coerce(body["zone"], tuple[float, ...], _join(path, "zone"))
                _require(len(z) == 4 and z[1] > z[0] and z[3] > z[2], _join(path, "zone"),
                         "expected [x0, x1, y0, y1] with x1 > x0, y1 > y0")
                kw["zone"] = z
            if "unit" in body:
                kw["unit"] = _coerce(body["unit"], float, _join(path, "unit"))
                _require(kw["unit"] > 0, _join(path, "unit"), "must be > 0")
            if "orientation_unit" in body:
                kw["orientation_unit"] = _coerce(body["orientation_unit"], float | None,
                                                 _join(path, "orientation_unit"))
                _require(kw["orientation_unit"] is None or kw["orientation_unit"] > 0,
                         _join(path, "orientation_unit"), "must be > 0")
            if body.get("coupled") is not None:
                c = body["coupled"]
                cp = _join(path, "coupled")
                _require(isinstance(c, dict) and set(c) == {"split_x", "left", "right"}, cp,
                         "expected {split_x, left, right}")
                kw["coupled"] = {
                    "split_x": _coerce(c["split_x"], float, cp + ".split_x"),
                    **{side: [rational(x, f"{cp}.{side}[{i}]") for i, x in enumerate(c[side])]
                       for side in ("left", "right")},
                }
                for side in ("left", "right"):
                    ws = kw["coupled"][side]
                    _require(len(ws) == 6 and sum(ws) == 1 and min(ws) >= 0, f"{cp}.{side}",
                             "expected 6 weights >= 0 summing to 1")
            return DicePhenomenon(**kw)
        if t == "urn":
            _require(set(body) == {"painting"}, path, "urn takes exactly one field: painting")
            return urn_from_painting(painting_from_spec(body["painting"], _join(path, "painting"), base_dir))
        if t == "finite":
            for k in body:
                _require(k in {"cells", "masses", "label_axis", "axis_order"}, _join(path, k), "unknown field")
            cells, masses = body.get("cells"), body.get("masses")
            _require(isinstance(cells, list) and cells, _join(path, "cells"), "expected a non-empty list")
            for i, c in enumerate(cells):
                _require(isinstance(c, dict), f"{path}.cells[{i}]", "expected an object")
            _require(isinstance(masses, list) and len(masses) == len(cells), _join(path, "masses"),
                     "expected one mass per cell")
            ms = [rational(m, f"{path}.masses[{i}]") for i, m in enumerate(masses)]
            _require(sum(ms) == 1 and min(ms) >= 0, _join(path, "masses"), "masses must be >= 0 and sum to 1")
            label_axis = _coerce(body.get("label_axis", "r"), str, _join(path, "label_axis"))
            order = body.get("axis_order")
            if order is not None:
                order = _coerce(order, tuple[str, ...], _join(path, "axis_order"))
            return FinitePhenomenon(cells, ms, label_axis, order)
        if t == "deterministic":
            for k in body:
                _require(k == "label", _join(path, k), "unknown field")
            return FinitePhenomenon.deterministic(body.get("label", "a"))
        raise _Fail(_join(path, "type"), f"unknown phenomenon type {t!r}")

    return _wrap(path, build)


def channel_from_spec(spec, path) -> Channel:
    def build():
        _require(isinstance(spec, dict), path, "expected an object")
        cid = _coerce(spec.get("id"), str, _join(path, "id"))
        uni = spec.get("universe")
        _require(isinstance(uni, list) and uni, _join(path, "universe"), "expected a non-empty list")
        _require(len(set(map(json.dumps, uni))) == len(uni), _join(path, "universe"), "duplicate outcomes")
        s = spec.get("sampler")
        sp = _join(path, "sampler")
        _require(isinstance(s, dict), sp, "expected an object")
        t = s.get("type")

        def law(key):
            ms = s.get(key)
            _require(isinstance(ms, list) and len(ms) == len(uni), f"{sp}.{key}",
                     "expected one mass per universe outcome")
            out = [rational(m, f"{sp}.{key}[{i}]") for i, m in enumerate(ms)]
            _require(sum(out) == 1 and min(out) >= 0, f"{sp}.{key}", "masses must be >= 0 and sum to 1")
            return out

        if t == "iid":
            sampler = iid_sampler(law("masses"))
        elif t == "constant":
            idx = _coerce(s.get("index", 0), int, sp + ".index")
            _require(0 <= idx < len(uni), sp + ".index", "outside the universe")
            sampler = constant_sampler(idx)
        elif t == "switching":
            at = _coerce(s.get("switch_at"), int, sp + ".switch_at")
            _require(at >= 0, sp + ".switch_at", "must be >= 0")
            sampler = switching_sampler(law("before"), law("after"), at)
        else:
            raise _Fail(sp + ".type", f"unknown sampler type {t!r}")
        return Channel(cid, tuple(uni), sampler)

    return _wrap(path, build)


# -- loading ----------------------------------------------------------------


def parse_scenario(data: Mapping, base_dir=Path("."), name="scenario", seed_override: int | None = None) -> Scenario:
    """Validate a scenario document and build every object it names.

    Building eagerly means a scenario that validates can also run.
    """
    def build():
        _require(isinstance(data, dict), "", "scenario must be a JSON object")
        for k in data:
            _require(k in {"kind", "seed", "params", "phenomenon", "painting", "channels", "description"},
                     k, "unknown field")
        kind = data.get("kind")
        _require(kind in KINDS, "kind", f"must be one of {', '.join(KINDS)}")
        if seed_override is not None:
            seed = seed_override
        else:
            _require("seed" in data, "seed", "is required (no ambient randomness)")
            seed = _coerce(data["seed"], int, "seed")
        _require(seed >= 0, "seed", "must be >= 0")
        params = build_block(PARAMS[kind], data.get("params"), "params")
        sc = Scenario(kind, seed, params, data.get("phenomenon"), data.get("painting"),
                      data.get("channels"), name, Path(base_dir), dict(data))
        if kind in NEEDS_PAINTING:
            _require("painting" in data, "painting", "is required for this kind")
            sc.build_painting()
        if kind in NEEDS_PHENOMENON:
            _require("phenomenon" in data, "phenomenon", "is required for this kind")
            ph = sc.build_phenomenon()
            if kind in ("lln-check", "factualized-lln"):
                _require(params.label in ph.labels, "params.label",
                         f"not a label of the phenomenon {list(ph.labels)}")
            if kind == "compare":
                _require(ph.ground_truth is not None, "phenomenon", "comparison needs a known ground truth")
        if kind == "pre-tree":
            _require(isinstance(data.get("channels"), list) and data["channels"], "channels",
                     "expected a non-empty list")
            sc.build_channels()
        return sc

    return _wrap("", build)


def load_scenario(path, seed_override: int | None = None) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such file {str(path)!r}", "scenario") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON: {e.msg} at line {e.lineno}", "scenario") from None
    return parse_scenario(data, path.parent, path.stem, seed_override)


__all__ = ["KINDS", "Scenario", "load_scenario", "parse_scenario", "FactprobError"]
