"""YAML model files.

A model file is a mapping with the sections ``grid``, ``actions``,
``kernel``, ``costs`` and optionally ``horizon``::

    grid: {kind: integer, half_range: 5, step: 1}     # folded: true for folded models
    actions: [0, 1, 2]
    horizon: 4
    kernel:
      table: [[[...row...], ...], ...]                  # one n x n matrix per action
    costs:
      stage: [[...], ...]                                # n x |U|, reused every stage
      # or  stages: [[[...]], ...]                       # one table per stage t = 1..T-1
      terminal: [...]                                    # n values, or a scalar

``kernel`` and ``costs`` may instead name a generator::

    kernel: {generator: {preset: fig1, params: {q1: 0.9}}}
    costs: {generator: {preset: fig1, params: {q1: 0.9}}}   # or just ``costs: generator``

Presets: ``remote-estimation``, ``fig1``, ``counterexample-m5``,
``counterexample-m2``.  Table rows follow the grid order (ascending ``x``).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import DimensionMismatch, ModelParseError, ValidationError
from .folding import FoldedModel
from .model import GRID_KINDS, ActionSet, CostSpec, FoldedGrid, Kernel, MDPModel, StateGrid
from . import remote

PRESETS = ("remote-estimation", "fig1", "counterexample-m5", "counterexample-m2")


def _require(doc, key, where=None):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelParseError("missing section", f"{where}.{key}" if where else key)
    return doc[key]


def _array(value, field, ndim):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ModelParseError("expected a numeric table", field) from None
    if arr.ndim != ndim:
        raise ModelParseError(f"expected a {ndim}-dimensional table, got {arr.ndim}", field)
    return arr


def _number(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelParseError(f"expected a number, got {value!r}", field)
    return value


def _parse_grid(doc):
    g = _require(doc, "grid")
    if not isinstance(g, dict):
        raise ModelParseError("expected a mapping", "grid")
    kind = _require(g, "kind", "grid")
    if kind not in GRID_KINDS:
        raise ModelParseError(f"kind must be one of {GRID_KINDS}", "grid.kind")
    half = _number(_require(g, "half_range", "grid"), "grid.half_range")
    step = _number(g.get("step", 1), "grid.step")
    grid = StateGrid(kind, half, step)
    return FoldedGrid.of(grid) if g.get("folded", False) else grid


def _preset_model(spec, field):
    if isinstance(spec, str):
        spec = {"preset": spec}
    if not isinstance(spec, dict) or "preset" not in spec:
        raise ModelParseError("generator needs a preset name", field)
    preset = spec["preset"]
    params = spec.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ModelParseError("params must be a mapping", f"{field}.params")
    try:
        return generate(preset, params)
    except TypeError as exc:
        raise ModelParseError(str(exc), f"{field}.params") from None


def generate(preset: str, params: dict) -> MDPModel:
    """Build the model for a named preset with parameter overrides."""
    if preset == "fig1":
        return remote.fig1_model(**params)[0]
    if preset == "counterexample-m5":
        return remote.counterexample_m5(**params).model
    if preset == "counterexample-m2":
        p = dict(params)
        if "noise" in p:
            p["noise"] = tuple(p["noise"])
        return remote.counterexample_m2(**p).model
    if preset == "remote-estimation":
        return _remote_from_params(params)
    raise ModelParseError(f"unknown preset {preset!r}; choose from {PRESETS}", "preset")


def _remote_from_params(p):
    p = dict(p)
    grid = p.pop("grid", None)
    if not isinstance(grid, dict):
        raise ModelParseError("remote-estimation params need a grid mapping", "params.grid")
    grid = StateGrid(grid.get("kind"), grid.get("half_range"), grid.get("step", 1))
    noise = p.pop("noise", {"gaussian": {"sigma": 1.0}})
    if "gaussian" in noise:
        noise = remote.GaussianNoise(float((noise["gaussian"] or {}).get("sigma", 1.0)))
    elif "table" in noise:
        noise = remote.TableNoise(tuple(noise["table"]))
    else:
        raise ModelParseError("noise must be {gaussian: ...} or {table: [...]}", "params.noise")
    d = p.pop("d", "square")
    params = remote.RemoteEstimationParams(
        a=float(p.pop("a", 1.0)), noise=noise, lambda_=tuple(p.pop("lambda")),
        q=tuple(p.pop("q")), d=d, grid=grid, horizon=int(p.pop("horizon", 4)),
        actions=tuple(p.pop("actions")) if "actions" in p else None)
    if p:
        raise ModelParseError(f"unknown parameter(s) {sorted(p)}", "params")
    return remote.build_remote_model(params)[0]


def parse_model(doc):
    """Build an MDPModel (or FoldedModel) from a parsed YAML document."""
    if not isinstance(doc, dict):
        raise ModelParseError("model file must be a mapping")
    grid = _parse_grid(doc)
    actions_raw = _require(doc, "actions")
    if not isinstance(actions_raw, list):
        raise ModelParseError("expected a list", "actions")
    actions = ActionSet(tuple(_number(a, "actions") for a in actions_raw))
    horizon = doc.get("horizon")
    if horizon is not None:
        horizon = int(_number(horizon, "horizon"))

    kernel_doc = _require(doc, "kernel")
    costs_doc = _require(doc, "costs")
    generated = None
    if isinstance(kernel_doc, dict) and "generator" in kernel_doc:
        generated = _preset_model(kernel_doc["generator"], "kernel.generator")
        if generated.grid != grid:
            raise DimensionMismatch("grid section does not match the generated model")
        if generated.actions != actions:
            raise DimensionMismatch("actions section does not match the generated model")
        kernel = generated.kernel
    else:
        rows = _array(_require(kernel_doc, "table", "kernel"), "kernel.table", 3)
        kernel = Kernel(grid, actions, rows)

    if costs_doc == "generator" or (isinstance(costs_doc, dict) and "generator" in costs_doc):
        if generated is None:
            spec = costs_doc["generator"] if isinstance(costs_doc, dict) else None
            if spec is None:
                raise ModelParseError("costs: generator needs a kernel generator", "costs")
            generated = _preset_model(spec, "costs.generator")
        costs = generated.costs
    else:
        costs = _parse_costs(costs_doc, grid.size)
    if horizon is None and generated is not None:
        horizon = generated.horizon
    name = generated.name if generated is not None else ""
    if isinstance(grid, FoldedGrid):
        return FoldedModel(grid, actions, kernel, costs, horizon, name)
    return MDPModel(grid, actions, kernel, costs, horizon, name)


def _parse_costs(doc, n):
    if not isinstance(doc, dict):
        raise ModelParseError("expected a mapping", "costs")
    if "stage" in doc:
        stage = _array(doc["stage"], "costs.stage", 2)
    elif "stages" in doc:
        stage = [_array(s, f"costs.stages[{i}]", 2) for i, s in enumerate(doc["stages"])]
    else:
        raise ModelParseError("missing section", "costs.stage")
    term = doc.get("terminal", 0.0)
    if isinstance(term, (int, float)) and not isinstance(term, bool):
        terminal = np.full(n, float(term))
    else:
        terminal = _array(term, "costs.terminal", 1)
    return CostSpec(stage, terminal)


def load_model(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelParseError(f"cannot read model file: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelParseError(f"invalid YAML: {exc}") from None
    return parse_model(doc)


def _label(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def _num(v):
    return _label(v) if float(v).is_integer() and abs(v) < 2 ** 53 else float(v)


def model_document(model, generator: dict = None) -> dict:
    """Serializable mapping for ``model`` (tables, or a generator reference)."""
    g = model.grid
    doc = {"grid": {"kind": g.kind, "half_range": _num(g.half_range), "step": _num(g.step)}}
    if isinstance(g, FoldedGrid):
        doc["grid"]["folded"] = True
    doc["actions"] = [_label(a) for a in model.actions.values]
    if model.horizon is not None:
        doc["horizon"] = int(model.horizon)
    if generator is not None:
        doc["kernel"] = {"generator": generator}
        doc["costs"] = "generator"
        return doc
    doc["kernel"] = {"table": model.kernel.rows.tolist()}
    costs = model.costs
    if costs.homogeneous:
        doc["costs"] = {"stage": costs.stage.tolist()}
    else:
        doc["costs"] = {"stages": [s.tolist() for s in costs.stage]}
    doc["costs"]["terminal"] = costs.terminal.tolist()
    return doc


def dump_model(model, path=None, generator: dict = None) -> str:
    text = yaml.safe_dump(model_document(model, generator), sort_keys=False,
                          default_flow_style=None, width=10_000)
    if path is not None:
        Path(path).write_text(text)
    return text


__all__ = ["load_model", "parse_model", "dump_model", "model_document", "generate", "PRESETS",
           "ValidationError"]
