"""Scenario documents: schema, validation and construction of the objects they describe."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .example_sde import DEFAULT_TOLS, ExampleScenario, SuiteConfig, build_from_space
from .measure_space import ProbSpace, RScalar, gauss_hermite_space
from .operators import MultOp, Operator, compose, exp_op, identity, zero_op
from .rn_module import Process, TimeGrid, catalog_process, process_from_spec, random_process
from .semigroup import CSemigroup

_TABLE = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_PROCESS = {
    "oneOf": [
        {"enum": ["one_on_unit", "ramp", "gaussian_bump", "random"]},
        {"type": "object", "properties": {"table": _TABLE}, "required": ["table"], "additionalProperties": False},
    ]
}
_OPERATOR = {
    "oneOf": [
        {"enum": ["H", "C=exp(H)", "A=Z*H", "identity", "zero"]},
        {"type": "object", "properties": {"custom": _TABLE}, "required": ["custom"], "additionalProperties": False},
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "space": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gauss_hermite": {"type": "integer", "minimum": 1},
                "atoms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "label": {"type": "string"},
                            "prob": {"type": "number"},
                            "Z": {"type": "number"},
                        },
                        "required": ["label", "prob", "Z"],
                    },
                },
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_max": {"type": "number", "exclusiveMinimum": 1},
                "time_nodes": {"type": "integer", "minimum": 4},
            },
        },
        "evolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "s_points": {"type": "integer", "minimum": 2},
                "panels": {"type": "integer", "minimum": 2},
                "h_seq": {"type": "array", "minItems": 3, "items": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        "operators": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "C": _OPERATOR,
                "A": _OPERATOR,
                "family": {
                    "oneOf": [
                        {"enum": ["V(s)"]},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {"generator": _OPERATOR, "injector": _OPERATOR},
                            "required": ["generator", "injector"],
                        },
                    ]
                },
            },
        },
        "probes": {"type": "array", "minItems": 1, "items": _PROCESS},
        "initial": _PROCESS,
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLS},
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "csv": {"type": "string"}},
        },
    },
}


@dataclass
class Scenario:
    """Everything a subcommand needs, built from a validated document."""

    doc: dict
    example: ExampleScenario
    sg: CSemigroup
    A: Operator | None
    probes: list
    probe_names: list
    y: Process
    config: SuiteConfig

    @property
    def space(self) -> ProbSpace:
        return self.example.space

    @property
    def grid(self) -> TimeGrid:
        return self.example.grid

    @property
    def is_example(self) -> bool:
        ops = self.doc.get("operators", {})
        return (ops.get("C", "C=exp(H)") == "C=exp(H)" and ops.get("A", "A=Z*H") == "A=Z*H"
                and ops.get("family", "V(s)") == "V(s)")


def validate(doc: dict) -> dict:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"scenario invalid at {path}: {exc.message}") from None
    space = doc.get("space", {})
    if "gauss_hermite" in space and "atoms" in space:
        raise ConfigError("space: give either gauss_hermite or atoms, not both")
    nodes = doc.get("grid", {}).get("time_nodes")
    if nodes is not None and nodes % 2:
        raise ConfigError("grid.time_nodes must be even")
    return doc


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {path} is not valid JSON: {exc}") from None
    return validate(doc)


def _space(doc: dict) -> tuple[ProbSpace, RScalar]:
    spec = doc.get("space", {})
    if "atoms" in spec:
        try:
            return ProbSpace.from_json({"atoms": spec["atoms"]})
        except ValueError as exc:
            raise ConfigError(f"space: {exc}") from None
    return gauss_hermite_space(spec.get("gauss_hermite", 16))


def _operator(spec, ex: ExampleScenario) -> MultOp:
    if isinstance(spec, dict):
        table = np.asarray(spec["custom"], dtype=float)
        shape = (ex.space.n_atoms, ex.grid.n_cols)
        if table.shape != shape:
            raise ConfigError(f"custom operator table must have shape {shape}, got {table.shape}")
        return MultOp(ex.space, ex.grid, table, label="custom")
    return {
        "H": ex.H,
        "C=exp(H)": ex.C,
        "A=Z*H": ex.A,
        "identity": identity(ex.space, ex.grid),
        "zero": zero_op(ex.space, ex.grid),
    }[spec]


def _process(spec, ex: ExampleScenario, rng: np.random.Generator) -> Process:
    if spec == "random":
        return random_process(ex.space, ex.grid, rng)
    try:
        return process_from_spec(spec, ex.space, ex.grid)
    except ValueError as exc:
        raise ConfigError(f"process: {exc}") from None


def build(doc: dict, seed: int = 0) -> Scenario:
    """Construct the scenario; the example operators are always available by name."""
    space, Z = _space(doc)
    if Z is None:
        raise ConfigError("explicit atoms need Z values")
    g = doc.get("grid", {})
    try:
        grid = TimeGrid.uniform(g.get("t_max", 2.0), g.get("time_nodes", 512))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    init = doc.get("initial")
    rng = np.random.default_rng(seed)
    ex = build_from_space(space, Z, grid, None if init in (None, "random") else init)
    y = _process(init, ex, rng) if init == "random" else ex.y

    ops = doc.get("operators", {})
    C = _operator(ops.get("C", "C=exp(H)"), ex)
    A = _operator(ops.get("A", "A=Z*H"), ex)
    fam = ops.get("family", "V(s)")
    G, K = (ex.A, ex.C) if fam == "V(s)" else (_operator(fam["generator"], ex), _operator(fam["injector"], ex))

    def V(s):
        return compose(exp_op(G, s), K)

    sg = CSemigroup(V, C, generator=A, label="scenario")
    names = doc.get("probes", ["one_on_unit", "ramp", "gaussian_bump"])
    probes = [_process(p, ex, rng) for p in names]
    labels = [p if isinstance(p, str) else f"table{i}" for i, p in enumerate(names)]

    ev = doc.get("evolution", {})
    horizon = float(ev.get("horizon", 2.0))
    n = ev.get("s_points", 9)
    cfg = SuiteConfig(
        horizon=horizon,
        panels=ev.get("panels", 256),
        axiom_grid=[horizon * k / (n - 1) for k in range(n)],
        cas_levels=[l for l in (0.25 * horizon, 0.5 * horizon, horizon)],
        tol={**DEFAULT_TOLS, **doc.get("tolerances", {})},
    )
    if "h_seq" in ev:
        cfg.h_seq = list(ev["h_seq"])
    if cfg.panels % 2:
        raise ConfigError("evolution.panels must be even")
    return Scenario(doc, ex, sg, A, probes, labels, y, cfg)
