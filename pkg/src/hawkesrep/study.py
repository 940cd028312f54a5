"""Batch simulate-fit-aggregate experiment harness.

Simulates a constant-productivity target process with uniform marks, observes
each realization on nested event-count windows, fits a K-type representation
per window by maximum likelihood, and aggregates the median L1 parameter error
per (K, window) cell with order-statistic confidence bands.  Outputs a rows
CSV, a summary CSV, two SVG plots, and a manifest.

Every results file is byte-reproducible given the config: work items are pure
functions of their seeds, rows are written in a canonical order regardless of
worker scheduling, and the ``runtime_s`` column records deterministic optimizer
work (objective evaluations) rather than wall-clock seconds.  Wall-clock
timings go to a ``timings.csv`` sidecar, which is the one file excluded from
reproducibility guarantees.  Runs are resumable: rows are flushed as they
complete and a restart skips every row already on disk.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    EventStream,
    KernelSpec,
    MarkSpace,
    MvParams,
    TargetSpec,
    build_uniform_partition,
    constant_fn,
    uniform_density,
)
from .infer import _jittered, fit_mle
from .simulate import SimConfig, simulate_target

ROWS_HEADER = "realization,K,target_n,achieved_n,l1_error,converged,runtime_s"
SUMMARY_HEADER = "K,target_n,mae,lo90,hi90"

# Fits are local refinements: each start searches a box one order of
# magnitude wide (each way) around itself, so decay rates on likelihood
# plateaus (pairs with no informative events yet) stay near the start
# instead of drifting to arbitrary plateau points.
TRUST_FACTOR = 10.0


@dataclass(frozen=True)
class StudyConfig:
    """Full description of one experiment; identical configs give identical
    result files."""

    realizations: int
    horizon: float
    target_counts: tuple[int, ...]
    k_values: tuple[int, ...]
    spec: TargetSpec
    seed: int = 0
    workers: int = 1
    output_dir: str | Path = "study_out"

    def __post_init__(self):
        object.__setattr__(self, "target_counts", tuple(int(n) for n in self.target_counts))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not self.target_counts:
            raise ValueError("need at least one window size")
        if any(n < 1 for n in self.target_counts):
            raise ValueError("window sizes must be positive")
        if any(b <= a for a, b in zip(self.target_counts, self.target_counts[1:])):
            raise ValueError("window sizes must be strictly increasing")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ValueError("k_values must be non-empty positive integers")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class StudyRow:
    """One fitted (realization, K, window) cell.

    ``params`` is None for rows recovered from disk on resume.  ``runtime_s``
    is the deterministic optimizer-evaluation count; ``wall_s`` is the actual
    elapsed time (zero for recovered rows).
    """

    realization: int
    k: int
    target_n: int
    achieved_n: int
    params: MvParams | None
    l1_error: float
    converged: bool
    runtime_s: float
    wall_s: float = 0.0

    def __post_init__(self):
        if not self.l1_error >= 0:
            raise ValueError("l1_error must be non-negative")
        if abs(self.achieved_n - self.target_n) > 1:
            raise ValueError("achieved count must be within 1 of the target")

    def csv_line(self) -> str:
        return (
            f"{self.realization},{self.k},{self.target_n},{self.achieved_n},"
            f"{self.l1_error!r},{self.converged},{self.runtime_s!r}"
        )


@dataclass(frozen=True)
class SummaryCell:
    """Median error and a 90% order-statistic band for one (K, window) cell."""

    k: int
    target_n: int
    mae: float
    lo90: float
    hi90: float

    def csv_line(self) -> str:
        return f"{self.k},{self.target_n},{self.mae!r},{self.lo90!r},{self.hi90!r}"


@dataclass(frozen=True)
class StudyResult:
    rows: tuple[StudyRow, ...]
    summary: tuple[SummaryCell, ...]
    output_dir: Path
    complete: bool = True


def log_spaced_counts(lo_exp: float, hi_exp: float, count: int) -> tuple[int, ...]:
    """Event-count window schedule ``ceil(10^e)`` for ``count`` equally spaced
    exponents from ``lo_exp`` to ``hi_exp``."""
    if count < 2:
        raise ValueError("need at least two window sizes")
    if not hi_exp > lo_exp:
        raise ValueError("exponent range must be increasing")
    step = (hi_exp - lo_exp) / (count - 1)
    return tuple(math.ceil(10 ** (lo_exp + step * i)) for i in range(count))


def make_windows(
    stream: EventStream, target_counts: Sequence[int]
) -> tuple[EventStream, ...]:
    """Nested prefixes of ``stream``, each cut at its target-count-th event
    (the window horizon is that event's time)."""
    targets = [int(n) for n in target_counts]
    need = max(targets)
    if stream.n < need:
        raise ValueError(
            f"stream has {stream.n} events but the largest window needs "
            f"{need} (short by {need - stream.n})"
        )
    return tuple(stream.prefix(n) for n in targets)


def study_target(
    mu_star: float = 1.0,
    alpha_star: float = 1.0,
    beta_star: float = 2.0,
    convention: str = "unnormalized",
) -> TargetSpec:
    """The study's target family: uniform marks on [0, 1], constant
    productivity ``alpha_star``, constant decay ``beta_star``.

    Continuous marks let one simulated realization serve every K: relabeling
    ``u`` to ``floor(u*K)+1`` is exactly a discrete uniform draw on K labels,
    and the ground process does not depend on the marks.
    """
    space = MarkSpace.interval(0.0, 1.0)
    return TargetSpec(
        space=space,
        immigrant_rate=float(mu_star),
        mark_density=uniform_density(space),
        productivity=constant_fn(float(alpha_star)),
        beta=float(beta_star),
        kernel=KernelSpec(convention=convention),
    )


def _family_scalars(spec: TargetSpec) -> tuple[float, float, float]:
    """Extract (mu*, alpha*, beta*) or reject specs outside the study family."""
    f_const = getattr(spec.mark_density, "constant_value", None)
    if f_const is None:
        raise ValueError("study requires a uniform mark density")
    if not spec.has_constant_productivity:
        raise ValueError("study requires a constant productivity")
    if not spec.has_constant_beta:
        raise ValueError("study requires a constant decay rate")
    return (
        float(spec.immigrant_rate),
        float(spec.productivity.constant_value),
        float(spec.beta),
    )


def ansatz_truth(k: int, spec: TargetSpec) -> MvParams:
    """The exact K-type representation of a uniform-mark constant-productivity
    target, on singleton label cells: baselines mu*/K, excitations alpha*/K,
    decays beta* everywhere."""
    if k < 1:
        raise ValueError("k must be positive")
    mu_star, alpha_star, beta_star = _family_scalars(spec)
    return MvParams(
        np.full(k, mu_star / k),
        np.full((k, k), alpha_star / k),
        np.full((k, k), beta_star),
        spec.kernel,
    )


def relabel_to_types(stream: EventStream, k: int) -> EventStream:
    """Map unit-interval marks to k equiprobable integer labels 1..k."""
    if stream.space.is_discrete or stream.space.bounds != (0.0, 1.0):
        raise ValueError("relabeling expects continuous marks on [0, 1]")
    if k < 1:
        raise ValueError("k must be positive")
    labels = np.minimum(np.floor(stream.marks * k).astype(np.int64) + 1, k)
    return EventStream(
        stream.times,
        labels.astype(float),
        stream.horizon,
        MarkSpace.with_labels(range(1, k + 1)),
    )


# --- work items -------------------------------------------------------------

_cached_target = lru_cache(maxsize=8)(study_target)


@lru_cache(maxsize=4)
def _cached_realization(
    mu: float, alpha: float, beta: float, convention: str, horizon: float, seed: int
) -> EventStream:
    spec = _cached_target(mu, alpha, beta, convention)
    return simulate_target(spec, SimConfig(horizon=horizon, seed=seed))


def _sim_seed(base: int, realization: int) -> int:
    return int(
        np.random.SeedSequence([base, realization]).generate_state(1, np.uint64)[0]
    )


def _run_item(item: tuple) -> tuple:
    """Fit one (realization, K, window) cell.  Pure given the item tuple."""
    s, k, n, sim_seed, mu, alpha, beta, convention, horizon, base_seed = item
    stream = _cached_realization(mu, alpha, beta, convention, horizon, sim_seed)
    window = relabel_to_types(stream, k).prefix(n)
    partition = build_uniform_partition(window.space, k)
    truth = ansatz_truth(k, _cached_target(mu, alpha, beta, convention))
    rng = np.random.default_rng(np.random.SeedSequence([base_seed, s, k, n, 7]))
    start = time.perf_counter()
    try:
        near_truth = fit_mle(
            partition, window, init=_jittered(truth, rng), restarts=1,
            trust_factor=TRUST_FACTOR,
        )
        background_split = fit_mle(
            partition, window, kernel=truth.kernel, restarts=1,
            trust_factor=TRUST_FACTOR,
        )
        best = (
            near_truth
            if near_truth.loglik >= background_split.loglik
            else background_split
        )
        l1 = float(np.abs(best.params.flatten() - truth.flatten()).sum())
        result = (
            best.params,
            l1,
            bool(best.converged),
            float(near_truth.evaluations + background_split.evaluations),
        )
    except Exception:
        result = (None, float("inf"), False, 0.0)
    wall = time.perf_counter() - start
    params, l1, converged, evaluations = result
    return (s, k, n, window.n, params, l1, converged, evaluations, wall)


def _row_from_result(result: tuple) -> StudyRow:
    s, k, n, achieved, params, l1, converged, evaluations, wall = result
    return StudyRow(
        realization=s,
        k=k,
        target_n=n,
        achieved_n=achieved,
        params=params,
        l1_error=l1,
        converged=converged,
        runtime_s=evaluations,
        wall_s=wall,
    )


# --- persistence ------------------------------------------------------------


def _config_descriptor(cfg: StudyConfig, scalars: tuple[float, float, float]) -> dict:
    mu, alpha, beta = scalars
    return {
        "realizations": cfg.realizations,
        "horizon": float(cfg.horizon),
        "target_counts": list(cfg.target_counts),
        "k_values": list(cfg.k_values),
        "seed": cfg.seed,
        "family": {
            "mu_star": mu,
            "alpha_star": alpha,
            "beta_star": beta,
            "kernel": cfg.spec.kernel.convention,
        },
    }


def _build_manifest(cfg: StudyConfig, scalars) -> dict:
    descriptor = _config_descriptor(cfg, scalars)
    digest = hashlib.sha256(
        json.dumps(descriptor, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    return {
        "config": descriptor,
        "config_hash": digest,
        "realization_seeds": [
            _sim_seed(cfg.seed, s) for s in range(cfg.realizations)
        ],
    }


def _parse_row_line(line: str, key: tuple[int, int, int]) -> StudyRow | None:
    parts = line.split(",")
    if len(parts) != 7:
        return None
    try:
        s, k, n, achieved = (int(p) for p in parts[:4])
        l1 = float(parts[4])
        if parts[5] not in ("True", "False"):
            return None
        converged = parts[5] == "True"
        runtime = float(parts[6])
    except ValueError:
        return None
    if (s, k, n) != key or l1 < 0:
        return None
    return StudyRow(s, k, n, achieved, None, l1, converged, runtime)


def _read_valid_prefix(path: Path, keys: list[tuple[int, int, int]]) -> list[StudyRow]:
    """Rows already on disk, in canonical order, stopping at the first line
    that is malformed or out of sequence (a kill mid-write truncates there)."""
    if not path.exists():
        return []
    lines = path.read_text().split("\n")
    if not lines or lines[0] != ROWS_HEADER:
        return []
    recovered = []
    for line, key in zip(lines[1:], keys):
        row = _parse_row_line(line, key)
        if row is None:
            break
        recovered.append(row)
    return recovered


class _OrderedRowWriter:
    """Serializes finished rows to disk in canonical key order, buffering
    out-of-order completions, flushing each line as written."""

    def __init__(self, path: Path, recovered: list[StudyRow], remaining_keys):
        self._fh = open(path, "w")
        self._fh.write(ROWS_HEADER + "\n")
        for row in recovered:
            self._fh.write(row.csv_line() + "\n")
        self._fh.flush()
        self._queue = list(remaining_keys)
        self._next = 0
        self._pending: dict[tuple, StudyRow] = {}
        self.written: list[StudyRow] = []

    def add(self, row: StudyRow) -> None:
        self._pending[(row.realization, row.k, row.target_n)] = row
        while self._next < len(self._queue) and self._queue[self._next] in self._pending:
            ready = self._pending.pop(self._queue[self._next])
            self._fh.write(ready.csv_line() + "\n")
            self._fh.flush()
            self.written.append(ready)
            self._next += 1

    def close(self) -> None:
        self._fh.close()


def median_band_ranks(s: int) -> tuple[int, int]:
    """1-based order-statistic ranks whose values bracket the median with
    at least 90% coverage (exact symmetric binomial tail bound; degenerates
    to the full range for very small s)."""
    if s < 1:
        raise ValueError("need at least one observation")
    lo = 1
    acc = 1  # running sum of binomial coefficients C(s, 0..l-1)
    for l in range(2, s // 2 + 2):
        acc += math.comb(s, l - 2 + 1)
        if 20 * acc <= 2**s:
            lo = l
        else:
            break
    return lo, s + 1 - lo


def summarize(rows: Sequence[StudyRow]) -> tuple[SummaryCell, ...]:
    """Median L1 error per (K, window) cell with a 90% median band."""
    groups: dict[tuple[int, int], list[float]] = {}
    for row in rows:
        groups.setdefault((row.k, row.target_n), []).append(row.l1_error)
    cells = []
    for (k, n) in sorted(groups):
        errors = np.sort(np.asarray(groups[(k, n)], dtype=float))
        lo, hi = median_band_ranks(errors.size)
        cells.append(
            SummaryCell(
                k=k,
                target_n=n,
                mae=float(np.median(errors)),
                lo90=float(errors[lo - 1]),
                hi90=float(errors[hi - 1]),
            )
        )
    return tuple(cells)


def mae_slope(summary: Sequence[SummaryCell], k: int) -> float:
    """Least-squares slope of log10 median error against log10 window size."""
    pts = [(c.target_n, c.mae) for c in summary if c.k == k]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 window sizes for k={k}, got {len(pts)}")
    x = np.log10([p[0] for p in pts])
    y = np.log10([max(p[1], 1e-300) for p in pts])
    return float(np.polyfit(x, y, 1)[0])


# --- plotting ---------------------------------------------------------------

_PALETTE = ("#1b6ca8", "#d1495b", "#2e933c", "#8e5ba6", "#c77d1e", "#3a3f58")


def _tick_values(lo: float, hi: float) -> list[float]:
    span = hi - lo
    step = next(s for s in (0.1, 0.2, 0.25, 0.5, 1.0, 2.0, 5.0) if span / s <= 8)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = first
    while v <= hi + 1e-9:
        ticks.append(round(v, 6))
        v += step
    return ticks

def _log10(value: float) -> float:
    """Plot coordinate; non-finite errors (failed fits) map to NaN and are
    skipped when drawing."""
    if not math.isfinite(value):
        return math.nan
    return math.log10(max(value, 1e-300))


def _render_plot(cells, path: Path, with_bands: bool, title: str) -> None:
    width, height = 640, 460
    ml, mr, mt, mb = 70, 150, 42, 58
    pw, ph = width - ml - mr, height - mt - mb
    ks = sorted({c.k for c in cells})
    xs = [math.log10(c.target_n) for c in cells]
    ys = [_log10(c.mae) for c in cells]
    if with_bands:
        ys += [_log10(c.lo90) for c in cells]
        ys += [_log10(c.hi90) for c in cells]
    ys = [v for v in ys if not math.isnan(v)]
    if not ys:
        ys = [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5
    x0, x1 = x0 - 0.04 * (x1 - x0), x1 + 0.04 * (x1 - x0)
    y0, y1 = y0 - 0.06 * (y1 - y0), y1 + 0.06 * (y1 - y0)

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.2f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for v in _tick_values(x0, x1):
        px = sx(v)
        out.append(
            f'<line x1="{px:.2f}" y1="{mt}" x2="{px:.2f}" y2="{mt + ph}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{mt + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{v:g}</text>'
        )
    for v in _tick_values(y0, y1):
        py = sy(v)
        out.append(
            f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{ml - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:g}</text>'
        )
    out.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333333" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{ml + pw / 2:.2f}" y="{height - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">log10 N</text>'
    )
    out.append(
        f'<text x="20" y="{mt + ph / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {mt + ph / 2:.2f})">log10 MAE</text>'
    )
    for idx, k in enumerate(ks):
        color = _PALETTE[idx % len(_PALETTE)]
        series = sorted((c for c in cells if c.k == k), key=lambda c: c.target_n)
        pts = [
            (sx(math.log10(c.target_n)), sy(_log10(c.mae)))
            for c in series
            if not math.isnan(_log10(c.mae))
        ]
        if with_bands:
            banded = [
                c
                for c in series
                if not (math.isnan(_log10(c.lo90)) or math.isnan(_log10(c.hi90)))
            ]
            top = [
                (sx(math.log10(c.target_n)), sy(_log10(c.hi90))) for c in banded
            ]
            bottom = [
                (sx(math.log10(c.target_n)), sy(_log10(c.lo90)))
                for c in reversed(banded)
            ]
            if banded:
                poly = " ".join(f"{px:.2f},{py:.2f}" for px, py in top + bottom)
                out.append(
                    f'<polygon points="{poly}" fill="{color}" fill-opacity="0.18"/>'
                )
        if len(pts) > 1:
            line = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
            out.append(
                f'<polyline points="{line}" fill="none" stroke="{color}" '
                f'stroke-width="1.8"/>'
            )
        for px, py in pts:
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
        ly = mt + 14 + 18 * idx
        out.append(
            f'<line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 34}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        out.append(
            f'<text x="{ml + pw + 40}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="12">K={k}</text>'
        )
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")


def emit_plots(summary: Sequence[SummaryCell], output_dir: str | Path) -> list[Path]:
    """Write the log-log error plot and its confidence-band companion."""
    cells = sorted(summary, key=lambda c: (c.k, c.target_n))
    if not cells:
        raise ValueError("cannot plot an empty summary")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    main = out / "mae_vs_n.svg"
    bands = out / "mae_vs_n_ci.svg"
    _render_plot(cells, main, False, "Median L1 parameter error vs window size")
    _render_plot(cells, bands, True, "Median L1 parameter error, 90% bands")
    return [main, bands]


# --- the harness ------------------------------------------------------------


def run_study(
    cfg: StudyConfig, *, resume: bool = False, _task_limit: int | None = None
) -> StudyResult:
    """Execute the full simulate-fit-aggregate pipeline.

    Fit failures are recorded per-row (``converged=False``, infinite error),
    never aborting the run.  With ``resume=True`` an existing output directory
    is validated against the config hash and completed rows are skipped.
    ``_task_limit`` stops after that many new rows (test hook standing in for
    an interrupt); the summary and plots are only written on full completion.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    scalars = _family_scalars(cfg.spec)
    mu, alpha, beta = scalars
    convention = cfg.spec.kernel.convention
    manifest = _build_manifest(cfg, scalars)
    manifest_path = out / "manifest.json"
    rows_path = out / "rows.csv"
    if resume and manifest_path.exists():
        previous = json.loads(manifest_path.read_text())
        if previous.get("config_hash") != manifest["config_hash"]:
            raise ValueError(
                "existing results were produced by a different config; "
                "refusing to resume"
            )
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    keys = [
        (s, k, n)
        for s in range(cfg.realizations)
        for k in cfg.k_values
        for n in cfg.target_counts
    ]
    recovered = _read_valid_prefix(rows_path, keys) if resume else []
    pending = keys[len(recovered) :]
    if _task_limit is not None:
        pending = pending[:_task_limit]
    items = [
        (s, k, n, _sim_seed(cfg.seed, s), mu, alpha, beta, convention,
         float(cfg.horizon), cfg.seed)
        for (s, k, n) in pending
    ]

    writer = _OrderedRowWriter(rows_path, recovered, pending)
    timings_path = out / "timings.csv"
    timings_mode = "a" if resume and timings_path.exists() else "w"
    with open(timings_path, timings_mode) as timings:
        if timings.tell() == 0:
            timings.write("realization,K,target_n,wall_s\n")

        def record(result):
            row = _row_from_result(result)
            writer.add(row)
            timings.write(
                f"{row.realization},{row.k},{row.target_n},{row.wall_s:.3f}\n"
            )
            timings.flush()

        try:
            if cfg.workers == 1 or len(items) <= 1:
                for item in items:
                    record(_run_item(item))
            else:
                with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                    futures = [pool.submit(_run_item, item) for item in items]
                    for future in as_completed(futures):
                        record(future.result())
        finally:
            writer.close()

    rows = tuple(recovered) + tuple(writer.written)
    complete = len(rows) == len(keys)
    summary: tuple[SummaryCell, ...] = ()
    if complete:
        summary = summarize(rows)
        with open(out / "summary.csv", "w") as fh:
            fh.write(SUMMARY_HEADER + "\n")
            for cell in summary:
                fh.write(cell.csv_line() + "\n")
        emit_plots(summary, out)
    return StudyResult(rows=rows, summary=summary, output_dir=out, complete=complete)


def load_config(path: str | Path, **overrides) -> StudyConfig:
    """Parse a key=value config file into a StudyConfig.

    Recognized keys: realizations (or s), horizon, target_counts, k_values,
    seed, workers, output_dir, and the target family scalars mu_star,
    alpha_star, beta_star (plus kernel_convention).  Comma-separated lists for
    the two sequence keys; '#' starts a comment.
    """
    values: dict[str, str] = {}
    for raw in Path(path).read_text().split("\n"):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().lower()] = value.strip()
    values.update({k: str(v) for k, v in overrides.items()})
    if "s" in values:
        values.setdefault("realizations", values.pop("s"))

    def ints(key, default=None):
        if key not in values:
            return default
        return tuple(int(part) for part in values[key].split(",") if part.strip())

    spec = study_target(
        mu_star=float(values.get("mu_star", 1.0)),
        alpha_star=float(values.get("alpha_star", 1.0)),
        beta_star=float(values.get("beta_star", 2.0)),
        convention=values.get("kernel_convention", "unnormalized"),
    )
    counts = ints("target_counts")
    if counts is None:
        raise ValueError("config must set target_counts")
    return StudyConfig(
        realizations=int(values.get("realizations", 1)),
        horizon=float(values["horizon"]),
        target_counts=counts,
        k_values=ints("k_values", (1,)),
        spec=spec,
        seed=int(values.get("seed", 0)),
        workers=int(values.get("workers", 1)),
        output_dir=values.get("output_dir", "study_out"),
    )
