"""Event, parameter, and target-spec serialization.

Events travel as CSV with header ``time,mark`` (rows ascending in time) plus a
sidecar JSON descriptor ``{horizon, space_kind, bounds_or_labels}`` that pins
down the observation window and mark space.  Parameters and target specs are
JSON; mark functions are restricted to the named families (constant, affine,
uniform, categorical) so files stay declarative.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    EventStream,
    KernelSpec,
    MarkPartition,
    MarkSpace,
    MvParams,
    TargetSpec,
    affine_fn,
    categorical_density,
    constant_fn,
    uniform_density,
)


def descriptor_path_for(events_path: str | Path) -> Path:
    """The sidecar JSON path next to an event CSV (same name, .json)."""
    path = Path(events_path)
    sidecar = path.with_suffix(".json")
    if sidecar == path:
        sidecar = path.with_name(path.name + ".json")
    return sidecar


def space_to_dict(space: MarkSpace) -> dict:
    if space.is_discrete:
        return {"space_kind": "discrete", "bounds_or_labels": list(space.labels)}
    return {"space_kind": "continuous", "bounds_or_labels": list(space.bounds)}


def space_from_dict(payload: dict) -> MarkSpace:
    kind = payload["space_kind"]
    values = payload["bounds_or_labels"]
    if kind == "discrete":
        return MarkSpace.with_labels(int(v) for v in values)
    if kind == "continuous":
        if len(values) != 2:
            raise ValueError("continuous bounds need exactly two endpoints")
        return MarkSpace.interval(float(values[0]), float(values[1]))
    raise ValueError(f"unknown space kind {kind!r}")


def write_events(stream: EventStream, path: str | Path) -> tuple[Path, Path]:
    """Write an event CSV and its JSON descriptor; returns both paths."""
    path = Path(path)
    discrete = stream.space.is_discrete
    with open(path, "w") as fh:
        fh.write("time,mark\n")
        for t, m in zip(stream.times, stream.marks):
            mark = f"{int(m)}" if discrete else f"{float(m)!r}"
            fh.write(f"{float(t)!r},{mark}\n")
    descriptor = {"horizon": float(stream.horizon), **space_to_dict(stream.space)}
    sidecar = descriptor_path_for(path)
    sidecar.write_text(json.dumps(descriptor, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def read_events(path: str | Path, descriptor: str | Path | None = None) -> EventStream:
    """Read an event CSV plus its descriptor back into an EventStream."""
    path = Path(path)
    sidecar = Path(descriptor) if descriptor is not None else descriptor_path_for(path)
    if not sidecar.exists():
        raise FileNotFoundError(
            f"missing event descriptor {sidecar} (horizon and mark space)"
        )
    meta = json.loads(sidecar.read_text())
    lines = path.read_text().strip().split("\n")
    if not lines or lines[0] != "time,mark":
        raise ValueError(f"{path} is not an event CSV (expected header 'time,mark')")
    times, marks = [], []
    for line in lines[1:]:
        t_text, _, m_text = line.partition(",")
        times.append(float(t_text))
        marks.append(float(m_text))
    return EventStream(times, marks, float(meta["horizon"]), space_from_dict(meta))


_FAMILIES = ("constant", "affine", "uniform", "categorical")


def mark_fn_to_dict(fn) -> dict:
    """Serialize a tagged mark function; rejects ad-hoc callables."""
    payload = getattr(fn, "spec_dict", None)
    if payload is None:
        raise ValueError(
            "mark function is not from a named family "
            f"({', '.join(_FAMILIES)}) and cannot be serialized"
        )
    return dict(payload)


def mark_fn_from_dict(payload: dict, space: MarkSpace):
    family = payload.get("family")
    if family == "constant":
        return constant_fn(payload["value"])
    if family == "affine":
        return affine_fn(payload["intercept"], payload["slope"])
    if family == "uniform":
        return uniform_density(space)
    if family == "categorical":
        return categorical_density(space, payload["probs"])
    raise ValueError(f"unknown mark function family {family!r}")


def spec_to_dict(spec: TargetSpec) -> dict:
    beta = (
        float(spec.beta)
        if spec.has_constant_beta
        else mark_fn_to_dict(spec.beta)
    )
    return {
        **space_to_dict(spec.space),
        "immigrant_rate": float(spec.immigrant_rate),
        "mark_density": mark_fn_to_dict(spec.mark_density),
        "productivity": mark_fn_to_dict(spec.productivity),
        "beta": beta,
        "kernel": {
            "family": spec.kernel.family,
            "convention": spec.kernel.convention,
        },
    }


def spec_from_dict(payload: dict) -> TargetSpec:
    space = space_from_dict(payload)
    beta = payload["beta"]
    if isinstance(beta, dict):
        beta = mark_fn_from_dict(beta, space)
    else:
        beta = float(beta)
    kernel = payload.get("kernel", {})
    return TargetSpec(
        space=space,
        immigrant_rate=float(payload["immigrant_rate"]),
        mark_density=mark_fn_from_dict(payload["mark_density"], space),
        productivity=mark_fn_from_dict(payload["productivity"], space),
        beta=beta,
        kernel=KernelSpec(
            family=kernel.get("family", "exponential"),
            convention=kernel.get("convention", "density"),
        ),
    )


def write_spec(spec: TargetSpec, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n")
    return path


def read_spec(path: str | Path) -> TargetSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def partition_to_dict(partition: MarkPartition) -> dict:
    if partition.space.is_discrete:
        cells = [list(cell) for cell in partition.cells]
    else:
        cells = [[float(a), float(b)] for a, b in partition.cells]
    return {**space_to_dict(partition.space), "cells": cells}


def partition_from_dict(payload: dict) -> MarkPartition:
    space = space_from_dict(payload)
    if space.is_discrete:
        cells = tuple(tuple(int(v) for v in cell) for cell in payload["cells"])
    else:
        cells = tuple((float(a), float(b)) for a, b in payload["cells"])
    return MarkPartition(space, cells)


def params_to_dict(params: MvParams, partition: MarkPartition | None = None) -> dict:
    payload = {
        "lambda0": params.lambda0.tolist(),
        "alpha": params.alpha.tolist(),
        "beta": params.beta.tolist(),
        "kernel": {
            "family": params.kernel.family,
            "convention": params.kernel.convention,
        },
    }
    if partition is not None:
        payload["partition"] = partition_to_dict(partition)
    return payload


def params_from_dict(payload: dict) -> tuple[MvParams, MarkPartition | None]:
    kernel = payload.get("kernel", {})
    params = MvParams(
        np.asarray(payload["lambda0"], dtype=float),
        np.asarray(payload["alpha"], dtype=float),
        np.asarray(payload["beta"], dtype=float),
        KernelSpec(
            family=kernel.get("family", "exponential"),
            convention=kernel.get("convention", "density"),
        ),
    )
    partition = None
    if "partition" in payload:
        partition = partition_from_dict(payload["partition"])
    return params, partition


def write_params(
    params: MvParams, path: str | Path, partition: MarkPartition | None = None,
    extra: dict | None = None,
) -> Path:
    payload = params_to_dict(params, partition)
    if extra:
        payload.update(extra)
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_params(path: str | Path) -> tuple[MvParams, MarkPartition | None]:
    return params_from_dict(json.loads(Path(path).read_text()))
