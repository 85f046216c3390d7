"""YAML model/study documents: parsing, validation and serialization.

Layout::

    model:
      name, population
      compartments: [{name, initial}, ...]
      parameters:   [{name, nominal, range: [low, high], scale?}, ...]
      channels:     [{source, target, rate}, ...]
    groups:         [{name, parameters: [...]}, ..., {name: Z}]     (optional)
    studies:
      <study name>: {qoi, n, reps, representations, seed, paper_scale?, max_events?}

``scale: reciprocal`` means the range and nominal value are mean durations
and the model parameter is their inverse.  Without ``groups`` every
parameter is its own group and a ``Z`` group is appended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError, ValidationError
from .expr import to_source
from .gsa import InputGroup, InputSpec, ParameterSpec
from .model import ModelGraph, make_model
from .simulate import DEFAULT_MAX_EVENTS
from .study import QoIDef, StudyConfig

BUNDLED = ("sir", "seiarhd")


@dataclass(frozen=True)
class ModelConfig:
    model: ModelGraph
    inputs: InputSpec
    studies: dict[str, StudyConfig] = field(default_factory=dict)
    paper_scale: dict[str, tuple[int, int]] = field(default_factory=dict)

    def study(self, name: str, paper_scale: bool = False) -> StudyConfig:
        if name not in self.studies:
            raise ConfigError(f"no study named {name!r}", "studies")
        cfg = self.studies[name]
        if paper_scale and name in self.paper_scale:
            n, reps = self.paper_scale[name]
            cfg = cfg.with_overrides(n=n, reps=reps)
        return cfg


def _get(node: Mapping, key: str, where: str, kind=None):
    if not isinstance(node, Mapping):
        raise ConfigError("expected a mapping", where)
    if key not in node:
        raise ConfigError(f"missing key {key!r}", where)
    value = node[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{key!r} has the wrong type ({type(value).__name__})", f"{where}.{key}")
    return value


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", where)
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", where)
    return int(value)


def _parameters(doc, where) -> list[ParameterSpec]:
    out = []
    for k, node in enumerate(_get(doc, "parameters", where, list)):
        loc = f"{where}.parameters[{k}]"
        name = _get(node, "name", loc, str)
        loc = f"{loc} ({name})"
        if "range" not in node:
            raise ConfigError(f"parameter {name!r} has no range", loc)
        rng = node["range"]
        if not isinstance(rng, list) or len(rng) != 2:
            raise ConfigError(f"parameter {name!r}: range must be [low, high]", loc)
        low, high = (_number(v, f"{loc}.range") for v in rng)
        nominal = _number(_get(node, "nominal", loc), f"{loc}.nominal")
        try:
            out.append(ParameterSpec(name, nominal, low, high, node.get("scale", "linear")))
        except ValidationError as exc:
            raise ConfigError(str(exc), loc) from None
    return out


def _model(doc) -> tuple[ModelGraph, list[ParameterSpec]]:
    where = "model"
    node = _get(doc, "model", "<document>")
    name = _get(node, "name", where, str)
    population = _integer(_get(node, "population", where), f"{where}.population")
    comps, initial = [], []
    for k, c in enumerate(_get(node, "compartments", where, list)):
        loc = f"{where}.compartments[{k}]"
        comps.append(str(_get(c, "name", loc)))
        initial.append(_integer(_get(c, "initial", loc), f"{loc}.initial"))
    params = _parameters(node, where)
    names = [p.name for p in params]
    channels = []
    for k, ch in enumerate(_get(node, "channels", where, list)):
        loc = f"{where}.channels[{k}]"
        channels.append((_get(ch, "source", loc, str), _get(ch, "target", loc, str), str(_get(ch, "rate", loc))))
    # build channel by channel first so errors point at the offending entry
    for k, triple in enumerate(channels):
        try:
            make_model(name, comps, names, [triple], [0] * (len(comps) - 1) + [population], population)
        except ValidationError as exc:
            raise ConfigError(str(exc), f"{where}.channels[{k}]") from None
    try:
        model = make_model(name, comps, names, channels, initial, population)
    except ValidationError as exc:
        raise ConfigError(str(exc), where) from None
    return model, params


def _inputs(doc, params) -> InputSpec:
    if "groups" not in doc or doc["groups"] is None:
        return InputSpec.one_group_per_parameter(params)
    groups = []
    for k, g in enumerate(_get(doc, "groups", "<document>", list)):
        loc = f"groups[{k}]"
        members = g.get("parameters", []) if isinstance(g, Mapping) else None
        if not isinstance(members, list):
            raise ConfigError("group parameters must be a list", loc)
        groups.append(InputGroup(str(_get(g, "name", loc)), tuple(str(p) for p in members)))
    try:
        return InputSpec(tuple(params), tuple(groups))
    except ValidationError as exc:
        raise ConfigError(str(exc), "groups") from None


def _qoi(node, loc) -> QoIDef:
    kind = _get(node, "kind", loc, str)
    try:
        if kind == "extinction_time":
            return QoIDef.extinction([str(c) for c in _get(node, "compartments", loc, list)])
        if kind == "compartment_curve":
            return QoIDef.curve(
                str(_get(node, "compartment", loc)),
                _number(_get(node, "t_end", loc), f"{loc}.t_end"),
                _integer(_get(node, "points", loc), f"{loc}.points"),
            )
    except ValidationError as exc:
        raise ConfigError(str(exc), loc) from None
    raise ConfigError(f"unknown QoI kind {kind!r}", f"{loc}.kind")


def _studies(doc, model, inputs):
    studies, paper = {}, {}
    for name, node in (doc.get("studies") or {}).items():
        loc = f"studies.{name}"
        qoi = _qoi(_get(node, "qoi", loc), f"{loc}.qoi")
        reps = [str(r) for r in _get(node, "representations", loc, list)]
        try:
            studies[name] = StudyConfig(
                model,
                inputs,
                tuple(reps),
                _integer(_get(node, "n", loc), f"{loc}.n"),
                _integer(_get(node, "reps", loc), f"{loc}.reps"),
                qoi,
                _integer(_get(node, "seed", loc), f"{loc}.seed"),
                _integer(node.get("max_events", DEFAULT_MAX_EVENTS), f"{loc}.max_events"),
            )
        except (ValidationError, ValueError) as exc:
            raise ConfigError(str(exc), loc) from None
        if "paper_scale" in node:
            ps = node["paper_scale"]
            paper[name] = (
                _integer(_get(ps, "n", f"{loc}.paper_scale"), f"{loc}.paper_scale.n"),
                _integer(_get(ps, "reps", f"{loc}.paper_scale"), f"{loc}.paper_scale.reps"),
            )
    return studies, paper


def parse_model_config(doc) -> ModelConfig:
    """Parse a YAML string or an already-loaded mapping."""
    if isinstance(doc, str):
        try:
            doc = yaml.safe_load(doc)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ConfigError("document must be a mapping", "<document>")
    model, params = _model(doc)
    inputs = _inputs(doc, params)
    studies, paper = _studies(doc, model, inputs)
    return ModelConfig(model, inputs, studies, paper)


def _num(x: float):
    return int(x) if float(x).is_integer() and math.isfinite(x) else float(x)


def to_document(cfg: ModelConfig) -> dict[str, Any]:
    m = cfg.model
    params = []
    for p in cfg.inputs.parameters:
        entry = {"name": p.name, "nominal": _num(p.nominal), "range": [_num(p.low), _num(p.high)]}
        if p.scale != "linear":
            entry["scale"] = p.scale
        params.append(entry)
    doc: dict[str, Any] = {
        "model": {
            "name": m.name,
            "population": m.population,
            "compartments": [{"name": c, "initial": x} for c, x in zip(m.compartments, m.initial)],
            "parameters": params,
            "channels": [{"source": ch.source, "target": ch.target, "rate": to_source(ch.rate)} for ch in m.channels],
        },
        "groups": [
            {"name": g.name, "parameters": list(g.parameters)} if not g.is_z else {"name": g.name}
            for g in cfg.inputs.groups
        ],
    }
    studies = {}
    for name, s in cfg.studies.items():
        q = s.qoi
        if q.is_scalar:
            qoi = {"kind": q.kind, "compartments": list(q.compartments)}
        else:
            qoi = {"kind": q.kind, "compartment": q.compartments[0], "t_end": _num(q.t_end), "points": q.points}
        entry = {"qoi": qoi, "n": s.n, "reps": s.reps}
        if name in cfg.paper_scale:
            entry["paper_scale"] = {"n": cfg.paper_scale[name][0], "reps": cfg.paper_scale[name][1]}
        entry["representations"] = [r.value for r in s.representations]
        entry["seed"] = s.seed
        if s.max_events != DEFAULT_MAX_EVENTS:
            entry["max_events"] = s.max_events
        studies[name] = entry
    if studies:
        doc["studies"] = studies
    return doc


def dump_config(cfg: ModelConfig) -> str:
    return yaml.safe_dump(to_document(cfg), sort_keys=False, default_flow_style=None)


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r} (available: {', '.join(BUNDLED)})")
    return resources.files("ctmcgsa").joinpath("data", f"{name}.yaml").read_text()


def load_config(path_or_name) -> ModelConfig:
    """Load a YAML file, or a bundled config by name (``sir``, ``seiarhd``)."""
    path = Path(path_or_name)
    if path.is_file():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return parse_model_config(text)
    stem = path.name[: -len(path.suffix)] if path.suffix in (".yaml", ".yml", ".cfg") else path.name
    if stem in BUNDLED and len(path.parts) == 1:
        return parse_model_config(bundled_text(stem))
    raise ConfigError(f"config file not found: {path_or_name}")
