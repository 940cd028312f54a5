"""Thinning simulation of marked targets and their multivariate
representations, with seeded, bit-reproducible randomness.

Both simulators refresh the dominating rate at every candidate (accepted or
not) with the current ground intensity, which bounds the future intensity
because exponential excitation only decays between events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._recursions import thin_multivariate, thin_univariate_const
from .core import EventStream, MarkPartition, MvParams, TargetSpec

__all__ = [
    "SimConfig",
    "ExplosionError",
    "simulate_target",
    "simulate_mv",
    "target_residuals",
    "mv_residuals",
]


class ExplosionError(RuntimeError):
    """The event cap was hit; ``stream`` holds the partial realisation."""

    def __init__(self, message: str, stream: EventStream):
        super().__init__(message)
        self.stream = stream


@dataclass(frozen=True)
class SimConfig:
    """Simulation window, seed, and the explosion guard."""

    horizon: float
    seed: int = 0
    max_events: int = 10_000_000

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.max_events) <= 0:
            raise ValueError(f"max_events must be positive, got {self.max_events}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "max_events", int(self.max_events))


def _draw_marks(spec: TargetSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. marks from the target density."""
    if n == 0:
        return np.empty(0)
    if spec.mark_sampler is not None:
        marks = np.asarray(spec.mark_sampler(rng, n), dtype=float)
        if marks.shape != (n,):
            raise ValueError(f"mark_sampler must return shape ({n},), got {marks.shape}")
        if not np.all(spec.space.contains(marks)):
            raise ValueError("mark_sampler produced marks outside the space")
        return marks
    if spec.space.is_discrete:
        labels = np.asarray(spec.space.labels, dtype=float)
        probs = spec.density_at(labels)
        return rng.choice(labels, size=n, p=probs / probs.sum())
    lo, hi = spec.space.bounds
    bound = spec._density_sup * 1.05 + 1e-12
    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = max(64, int(1.5 * (n - filled) * bound * (hi - lo) / 1.0))
        batch = min(batch, 1_000_000)
        x = lo + rng.random(batch) * (hi - lo)
        u = rng.random(batch) * bound
        f_x = spec.density_at(x)
        if np.any(f_x > bound):
            raise ValueError(
                "mark density exceeds its grid-estimated bound; "
                "supply an exact mark_sampler on the target"
            )
        accepted = x[u <= f_x]
        take = min(accepted.size, n - filled)
        out[filled : filled + take] = accepted[:take]
        filled += take
    return out


def _simulate_target_general(
    spec: TargetSpec, cfg: SimConfig, rng: np.random.Generator
):
    """Python-loop thinning when productivity or decay depend on the mark
    (each accepted mark changes the future intensity)."""
    horizon = cfg.horizon
    immigrant = spec.immigrant_rate
    times: list[float] = []
    marks: list[float] = []
    contrib = np.empty(0)
    decays = np.empty(0)
    t = 0.0
    lam_bar = immigrant
    exploded = False
    while lam_bar > 0.0:
        t_cand = t + rng.exponential(1.0 / lam_bar)
        if t_cand > horizon:
            break
        contrib = contrib * np.exp(-decays * (t_cand - t))
        lam = immigrant + float(contrib.sum())
        t = t_cand
        if rng.random() * lam_bar <= lam:
            mark = float(_draw_marks(spec, rng, 1)[0])
            times.append(t)
            marks.append(mark)
            beta_m = float(spec.beta_at(mark))
            new_contrib = float(spec.productivity_at(mark)) * float(
                spec.kernel.value_at_zero(beta_m)
            )
            contrib = np.append(contrib, new_contrib)
            decays = np.append(decays, beta_m)
            if len(times) >= cfg.max_events:
                exploded = True
                break
            lam += new_contrib
        lam_bar = lam
    return np.asarray(times), np.asarray(marks), exploded


def simulate_target(spec: TargetSpec, cfg: SimConfig) -> EventStream:
    """Simulate the marked target on [0, horizon] by thinning.

    Marks are i.i.d. from the target density; when productivity and decay are
    mark-free the arrival mechanism decouples from the marks, and a compiled
    scalar-state loop generates the times with marks attached afterwards.
    """
    rng = np.random.default_rng(cfg.seed)
    if spec.has_constant_beta and spec.has_constant_productivity:
        times, exploded = thin_univariate_const(
            rng,
            cfg.horizon,
            spec.immigrant_rate,
            float(spec.productivity.constant_value),
            float(spec.beta),
            float(spec.kernel.value_at_zero(float(spec.beta))),
            cfg.max_events,
        )
        marks = _draw_marks(spec, rng, times.size)
    else:
        times, marks, exploded = _simulate_target_general(spec, cfg, rng)
    stream = EventStream(times, marks, cfg.horizon, spec.space)
    if exploded:
        raise ExplosionError(
            f"hit the {cfg.max_events}-event cap at t={times[-1]:.6g} "
            f"(horizon {cfg.horizon:g})",
            stream,
        )
    return stream


def _mv_marks(
    partition: MarkPartition, types: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Within-cell mark representatives: uniform draws on continuous cells,
    the cell's first label on discrete ones (the representation is constant
    on cells, so the choice never affects a likelihood)."""
    if partition.space.is_discrete:
        first_labels = np.array([cell[0] for cell in partition.cells], dtype=float)
        return first_labels[types]
    cells = np.asarray(partition.cells, dtype=float)
    lo = cells[types, 0]
    width = cells[types, 1] - cells[types, 0]
    return lo + rng.random(types.size) * width


def simulate_mv(
    params: MvParams, partition: MarkPartition, cfg: SimConfig
) -> EventStream:
    """Simulate the K-component representation on [0, horizon] by thinning.

    Type-i events arrive at rate mu(A_i) * lambda_i(t) and are emitted as
    marked events via a within-cell representative.
    """
    if params.k != partition.k:
        raise ValueError(
            f"params have {params.k} components but partition has {partition.k} cells"
        )
    rng = np.random.default_rng(cfg.seed)
    g_zero = np.asarray(params.kernel.value_at_zero(params.beta), dtype=float)
    times, types, exploded = thin_multivariate(
        rng,
        cfg.horizon,
        params.lambda0,
        params.alpha,
        params.beta,
        partition.measures,
        g_zero,
        cfg.max_events,
    )
    marks = _mv_marks(partition, types, rng)
    stream = EventStream(times, marks, cfg.horizon, partition.space)
    if exploded:
        raise ExplosionError(
            f"hit the {cfg.max_events}-event cap at t={times[-1]:.6g} "
            f"(horizon {cfg.horizon:g})",
            stream,
        )
    return stream


def target_residuals(spec: TargetSpec, stream: EventStream) -> np.ndarray:
    """Compensator increments of the target's ground process between
    consecutive events; Exp(1) i.i.d. when the stream follows the target."""
    times = stream.times
    if times.size == 0:
        return np.empty(0)
    xi_vals = spec.productivity_at(stream.marks)
    beta_vals = spec.beta_at(stream.marks)
    g_zero = spec.kernel.value_at_zero(beta_vals)
    out = np.empty(times.size)
    contrib = np.empty(times.size)
    decays = np.empty(times.size)
    n_seen = 0
    prev_t = 0.0
    for idx in range(times.size):
        dt = times[idx] - prev_t
        total = spec.immigrant_rate * dt
        if n_seen:
            decay = np.exp(-decays[:n_seen] * dt)
            total += float(
                np.sum(contrib[:n_seen] * (1.0 - decay) / decays[:n_seen])
            )
            contrib[:n_seen] *= decay
        out[idx] = total
        contrib[n_seen] = xi_vals[idx] * g_zero[idx]
        decays[n_seen] = beta_vals[idx]
        n_seen += 1
        prev_t = times[idx]
    return out


def mv_residuals(
    params: MvParams, partition: MarkPartition, stream: EventStream
) -> np.ndarray:
    """Compensator increments of the representation's ground process."""
    times = stream.times
    if times.size == 0:
        return np.empty(0)
    types = partition.cell_indices(stream.marks)
    measures = partition.measures
    base_rate = float(measures @ params.lambda0)
    g_zero = np.asarray(params.kernel.value_at_zero(params.beta), dtype=float)
    weights = measures[:, None] * params.alpha
    r_state = np.zeros((params.k, params.k))
    out = np.empty(times.size)
    prev_t = 0.0
    for idx in range(times.size):
        dt = times[idx] - prev_t
        decay = np.exp(-params.beta * dt)
        out[idx] = base_rate * dt + float(
            np.sum(weights * r_state * (1.0 - decay) / params.beta)
        )
        r_state = r_state * decay
        r_state[:, types[idx]] += g_zero[:, types[idx]]
        prev_t = times[idx]
    return out
