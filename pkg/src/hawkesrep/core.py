"""Mark spaces, partitions, event streams, and model parameter types.

The univariate processes handled here carry marks in a compact space: either
a real interval with Lebesgue measure or a finite label set with counting
measure.  A partition of that space into cells of positive measure is what
turns a marked univariate process into an unmarked multivariate one, with one
component per cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import adaptive_quad

__all__ = [
    "MarkSpace",
    "MarkPartition",
    "Event",
    "EventStream",
    "KernelSpec",
    "MvParams",
    "TargetSpec",
    "build_uniform_partition",
    "select_bin_count",
    "locate_cell",
    "constant_fn",
    "affine_fn",
    "uniform_density",
    "categorical_density",
]

_CONVENTIONS = ("density", "unnormalized")


def _eval_on(fn, x: np.ndarray) -> np.ndarray:
    """Evaluate a scalar-or-vectorised callable on an array of marks."""
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(fn(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(v)) for v in x.ravel()]).reshape(x.shape)


@dataclass(frozen=True)
class MarkSpace:
    """Compact mark domain.

    ``kind`` is ``"continuous"`` (an interval ``bounds=(lo, hi)`` under
    Lebesgue measure) or ``"discrete"`` (integer ``labels`` under counting
    measure).
    """

    kind: str
    bounds: tuple[float, float] | None = None
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind == "continuous":
            if self.bounds is None or self.labels is not None:
                raise ValueError("continuous mark space takes bounds and no labels")
            lo, hi = float(self.bounds[0]), float(self.bounds[1])
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"need finite bounds with lo < hi, got ({lo}, {hi})")
            object.__setattr__(self, "bounds", (lo, hi))
        elif self.kind == "discrete":
            if self.labels is None or self.bounds is not None:
                raise ValueError("discrete mark space takes labels and no bounds")
            labels = tuple(int(v) for v in self.labels)
            if len(labels) == 0:
                raise ValueError("discrete mark space needs at least one label")
            if len(set(labels)) != len(labels):
                raise ValueError("duplicate labels in mark space")
            object.__setattr__(self, "labels", tuple(sorted(labels)))
        else:
            raise ValueError(f"unknown mark space kind {self.kind!r}")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "MarkSpace":
        return cls("continuous", bounds=(lo, hi))

    @classmethod
    def with_labels(cls, labels: Sequence[int]) -> "MarkSpace":
        return cls("discrete", labels=tuple(labels))

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    @property
    def total_measure(self) -> float:
        if self.is_discrete:
            return float(len(self.labels))
        return self.bounds[1] - self.bounds[0]

    def contains(self, marks) -> np.ndarray:
        """Element-wise membership test (boolean array)."""
        m = np.asarray(marks, dtype=float)
        if self.is_discrete:
            lab = np.asarray(self.labels, dtype=float)
            return np.isin(m, lab)
        lo, hi = self.bounds
        return (m >= lo) & (m <= hi)


@dataclass(frozen=True)
class MarkPartition:
    """Finite partition of a mark space into cells of positive measure.

    Continuous cells are contiguous intervals ``(a, b)`` in ascending order
    covering the space; each is closed on the left and open on the right,
    except the last which is closed.  Discrete cells are disjoint label
    groups whose union is the label set.
    """

    space: MarkSpace
    cells: tuple

    def __post_init__(self):
        if self.space.is_discrete:
            cells = tuple(tuple(sorted(int(v) for v in cell)) for cell in self.cells)
            if not cells:
                raise ValueError("partition needs at least one cell")
            flat = [v for cell in cells for v in cell]
            if len(flat) != len(set(flat)):
                raise ValueError("cells overlap: duplicated labels")
            if set(flat) != set(self.space.labels):
                missing = set(self.space.labels) - set(flat)
                extra = set(flat) - set(self.space.labels)
                raise ValueError(
                    f"cells must cover the label set exactly "
                    f"(missing {sorted(missing)}, extraneous {sorted(extra)})"
                )
            if any(len(cell) == 0 for cell in cells):
                raise ValueError("empty cell has zero measure")
            cells = tuple(sorted(cells, key=lambda c: c[0]))
            object.__setattr__(self, "cells", cells)
            measures = np.array([float(len(c)) for c in cells])
            lookup = {}
            for idx, cell in enumerate(cells):
                for lab in cell:
                    lookup[lab] = idx
            object.__setattr__(self, "_label_to_cell", lookup)
        else:
            cells = tuple((float(a), float(b)) for a, b in self.cells)
            if not cells:
                raise ValueError("partition needs at least one cell")
            cells = tuple(sorted(cells, key=lambda c: c[0]))
            lo, hi = self.space.bounds
            if cells[0][0] != lo or cells[-1][1] != hi:
                raise ValueError(
                    f"cells must span [{lo}, {hi}], got [{cells[0][0]}, {cells[-1][1]}]"
                )
            for (a, b) in cells:
                if not b > a:
                    raise ValueError(f"cell ({a}, {b}) has non-positive measure")
            for (_, b), (a2, _) in zip(cells, cells[1:]):
                if a2 != b:
                    raise ValueError(f"gap or overlap between cells at {b} vs {a2}")
            object.__setattr__(self, "cells", cells)
            measures = np.array([b - a for a, b in cells])
            starts = np.array([a for a, _ in cells])
            starts.flags.writeable = False
            object.__setattr__(self, "_starts", starts)
        measures.flags.writeable = False
        object.__setattr__(self, "_measures", measures)

    @property
    def k(self) -> int:
        return len(self.cells)

    @property
    def measures(self) -> np.ndarray:
        """Cell measures (Lebesgue widths, or label counts)."""
        return self._measures

    def cell_indices(self, marks) -> np.ndarray:
        """0-based cell index per mark; raises on marks outside the space."""
        m = np.asarray(marks, dtype=float)
        inside = self.space.contains(m)
        if not np.all(inside):
            bad = np.asarray(m)[~inside]
            raise ValueError(f"marks outside the mark space: {bad[:5]}...")
        if self.space.is_discrete:
            lut = self._label_to_cell
            flat = m.ravel()
            out = np.fromiter(
                (lut[int(v)] for v in flat), dtype=np.int64, count=flat.size
            )
            return out.reshape(m.shape)
        idx = np.searchsorted(self._starts, m, side="right") - 1
        return np.asarray(idx, dtype=np.int64)

    def cell_index(self, mark: float) -> int:
        return int(self.cell_indices(np.asarray([mark]))[0])


def locate_cell(partition: MarkPartition, mark: float) -> int:
    """1-based index of the cell containing ``mark`` (components run 1..K)."""
    return partition.cell_index(mark) + 1


def build_uniform_partition(space: MarkSpace, k: int) -> MarkPartition:
    """Partition ``space`` into ``k`` cells of equal measure.

    Continuous spaces are split into ``k`` equal-width intervals.  Discrete
    spaces only support ``k`` equal to the number of labels (one singleton
    cell per label); coarser groupings can be built directly via
    :class:`MarkPartition`.
    """
    k = int(k)
    if k <= 0:
        raise ValueError(f"need at least one cell, got k={k}")
    if space.is_discrete:
        n_labels = len(space.labels)
        if k > n_labels:
            raise ValueError(f"k={k} exceeds the {n_labels} available labels")
        if k != n_labels:
            raise ValueError(
                f"uniform partition of a discrete space needs one cell per label "
                f"(k={k}, labels={n_labels}); pass explicit cells for coarser groupings"
            )
        return MarkPartition(space, tuple((lab,) for lab in space.labels))
    lo, hi = space.bounds
    edges = np.linspace(lo, hi, k + 1)
    return MarkPartition(space, tuple(zip(edges[:-1], edges[1:])))


def select_bin_count(n_events: int) -> int:
    """Cube-root bin rule: the smallest ``k`` with ``k**3 >= n_events``."""
    n = int(n_events)
    if n <= 0:
        raise ValueError(f"need a positive event count, got {n}")
    k = max(1, round(n ** (1.0 / 3.0)))
    while k**3 < n:
        k += 1
    while k > 1 and (k - 1) ** 3 >= n:
        k -= 1
    return k


@dataclass(frozen=True)
class Event:
    time: float
    mark: float


@dataclass(frozen=True)
class EventStream:
    """Strictly ordered marked events observed on ``[0, horizon]``."""

    times: np.ndarray
    marks: np.ndarray
    horizon: float
    space: MarkSpace

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        marks = np.array(self.marks, dtype=float)
        if times.ndim != 1 or marks.ndim != 1 or times.size != marks.size:
            raise ValueError(
                f"times and marks must be 1-d and equal length, "
                f"got {times.shape} and {marks.shape}"
            )
        horizon = float(self.horizon)
        if not (math.isfinite(horizon) and horizon > 0):
            raise ValueError(f"horizon must be finite and positive, got {horizon}")
        if not np.all(np.isfinite(times)):
            raise ValueError("non-finite event times")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ValueError("event times must be strictly increasing")
            if times[0] < 0 or times[-1] > horizon:
                raise ValueError(
                    f"event times must lie in [0, {horizon}], "
                    f"got range [{times[0]}, {times[-1]}]"
                )
        if not np.all(self.space.contains(marks)):
            raise ValueError("marks outside the mark space")
        times.flags.writeable = False
        marks.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "horizon", horizon)

    def __len__(self) -> int:
        return self.times.size

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def events(self) -> tuple[Event, ...]:
        return tuple(Event(t, m) for t, m in zip(self.times, self.marks))

    def prefix(self, n_events: int) -> "EventStream":
        """First ``n_events`` events, observed up to the last one's time."""
        n = int(n_events)
        if not 1 <= n <= self.n:
            raise ValueError(f"prefix length {n} outside [1, {self.n}]")
        return EventStream(
            self.times[:n], self.marks[:n], float(self.times[n - 1]), self.space
        )


@dataclass(frozen=True)
class KernelSpec:
    """Exponential decay family and its normalisation convention.

    ``density`` kernels are ``g(t; b) = b * exp(-b t)`` (unit mass);
    ``unnormalized`` kernels are ``g(t; b) = exp(-b t)`` (mass ``1/b``).
    """

    family: str = "exponential"
    convention: str = "density"

    def __post_init__(self):
        if self.family != "exponential":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if self.convention not in _CONVENTIONS:
            raise ValueError(
                f"convention must be one of {_CONVENTIONS}, got {self.convention!r}"
            )

    @property
    def is_unnormalized(self) -> bool:
        return self.convention == "unnormalized"

    def value(self, dt, beta):
        """Kernel value ``g(dt; beta)`` for ``dt >= 0``."""
        dt = np.asarray(dt, dtype=float)
        out = np.exp(-beta * dt)
        if not self.is_unnormalized:
            out = beta * out
        return out

    def value_at_zero(self, beta):
        beta = np.asarray(beta, dtype=float)
        return np.ones_like(beta) if self.is_unnormalized else beta

    def integral(self, dt, beta):
        """``int_0^dt g(u; beta) du``."""
        dt = np.asarray(dt, dtype=float)
        out = 1.0 - np.exp(-beta * dt)
        if self.is_unnormalized:
            out = out / beta
        return out

    def mass(self, beta):
        """Total kernel mass ``int_0^inf g``."""
        beta = np.asarray(beta, dtype=float)
        return np.ones_like(beta) if not self.is_unnormalized else 1.0 / beta


@dataclass(frozen=True)
class MvParams:
    """Parameters of a K-component unmarked Hawkes process.

    Component ``i`` has baseline ``lambda0[i]`` and is excited by past events
    of component ``j`` through ``alpha[i, j] * g(dt; beta[i, j])``.
    """

    lambda0: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        lam = np.array(self.lambda0, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        beta = np.array(self.beta, dtype=float)
        if lam.ndim != 1:
            raise ValueError(f"lambda0 must be 1-d, got shape {lam.shape}")
        k = lam.size
        if alpha.shape != (k, k) or beta.shape != (k, k):
            raise ValueError(
                f"alpha and beta must be ({k}, {k}), "
                f"got {alpha.shape} and {beta.shape}"
            )
        for name, arr in (("lambda0", lam), ("alpha", alpha), ("beta", beta)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
        if np.any(lam < 0) or np.any(alpha < 0):
            raise ValueError("lambda0 and alpha must be non-negative")
        if np.any(beta <= 0):
            raise ValueError("beta entries must be positive")
        for arr in (lam, alpha, beta):
            arr.flags.writeable = False
        object.__setattr__(self, "lambda0", lam)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def k(self) -> int:
        return self.lambda0.size

    def kernel_mass(self) -> np.ndarray:
        """Expected offspring matrix entries ``alpha * int g`` (no measures)."""
        return self.alpha * self.kernel.mass(self.beta)

    def flatten(self) -> np.ndarray:
        """Parameter vector ``(lambda0, alpha row-major, beta row-major)``."""
        return np.concatenate(
            [self.lambda0, self.alpha.ravel(), self.beta.ravel()]
        )

    @classmethod
    def from_flat(
        cls, vec: np.ndarray, k: int, kernel: KernelSpec | None = None
    ) -> "MvParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (k + 2 * k * k,):
            raise ValueError(
                f"flat vector must have length {k + 2 * k * k}, got {vec.shape}"
            )
        return cls(
            vec[:k],
            vec[k : k + k * k].reshape(k, k),
            vec[k + k * k :].reshape(k, k),
            kernel or KernelSpec(),
        )


def constant_fn(value: float) -> Callable:
    """Constant mark function; tagged so simulators can take fast paths."""
    value = float(value)

    def fn(m):
        m = np.asarray(m, dtype=float)
        return np.full_like(m, value)

    fn.constant_value = value
    fn.spec_dict = {"family": "constant", "value": value}
    return fn


def affine_fn(intercept: float, slope: float) -> Callable:
    """Affine mark function ``m -> intercept + slope * m``."""
    intercept, slope = float(intercept), float(slope)

    def fn(m):
        return intercept + slope * np.asarray(m, dtype=float)

    fn.spec_dict = {"family": "affine", "intercept": intercept, "slope": slope}
    if slope == 0.0:
        fn.constant_value = intercept
    return fn


def uniform_density(space: MarkSpace) -> Callable:
    """The uniform probability density on ``space``."""
    value = 1.0 / space.total_measure
    fn = constant_fn(value)
    fn.spec_dict = {"family": "uniform"}
    return fn


def categorical_density(space: MarkSpace, probs: Sequence[float]) -> Callable:
    """Probability mass function on a discrete space, given per-label weights."""
    if not space.is_discrete:
        raise ValueError("categorical densities need a discrete mark space")
    p = np.asarray(probs, dtype=float)
    if p.shape != (len(space.labels),):
        raise ValueError(
            f"need one probability per label ({len(space.labels)}), got {p.shape}"
        )
    if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-8):
        raise ValueError("probabilities must be non-negative and sum to 1")
    labels = np.asarray(space.labels, dtype=float)

    def fn(m):
        m = np.asarray(m, dtype=float)
        idx = np.searchsorted(labels, m)
        idx = np.clip(idx, 0, labels.size - 1)
        return np.where(np.isin(m, labels), p[idx], 0.0)

    fn.spec_dict = {"family": "categorical", "probs": [float(v) for v in p]}
    return fn


@dataclass(frozen=True)
class TargetSpec:
    """Separable univariate marked Hawkes target.

    The conditional intensity factorises as
    ``lambda(t, M | H) = f(M) * (Lambda + sum_i xi(M_i) g(t - t_i; beta(M_i)))``
    with mark density ``f``, immigrant rate ``Lambda``, productivity ``xi``,
    and per-mark decay ``beta`` (a constant or a function of the mark).
    """

    space: MarkSpace
    immigrant_rate: float
    mark_density: Callable
    productivity: Callable
    beta: float | Callable
    kernel: KernelSpec = field(default_factory=KernelSpec)
    mark_sampler: Callable | None = None
    separable: bool = True

    def __post_init__(self):
        if not self.separable:
            raise ValueError("only separable targets are supported")
        if not (
            math.isfinite(self.immigrant_rate) and self.immigrant_rate > 0
        ):
            raise ValueError(
                f"immigrant rate must be positive, got {self.immigrant_rate}"
            )
        object.__setattr__(self, "immigrant_rate", float(self.immigrant_rate))
        if not callable(self.beta):
            b = float(self.beta)
            if not (math.isfinite(b) and b > 0):
                raise ValueError(f"constant beta must be positive, got {b}")
            object.__setattr__(self, "beta", b)
        probe = self._probe_grid()
        f_vals = _eval_on(self.mark_density, probe)
        xi_vals = _eval_on(self.productivity, probe)
        b_vals = self.beta_at(probe)
        if not np.all(np.isfinite(f_vals)) or np.any(f_vals < 0):
            raise ValueError("mark density must be finite and non-negative")
        if not np.all(np.isfinite(xi_vals)) or np.any(xi_vals < 0):
            raise ValueError("productivity must be finite and non-negative")
        if not np.all(np.isfinite(b_vals)) or np.any(b_vals <= 0):
            raise ValueError("decay must be finite and positive")
        total = self._density_total()
        if abs(total - 1.0) > 1e-8:
            raise ValueError(
                f"mark density must integrate to 1 over the space, got {total:.10g}"
            )
        object.__setattr__(self, "_density_sup", float(f_vals.max()))

    def _probe_grid(self) -> np.ndarray:
        if self.space.is_discrete:
            return np.asarray(self.space.labels, dtype=float)
        lo, hi = self.space.bounds
        return np.linspace(lo, hi, 2049)

    def _density_total(self) -> float:
        if self.space.is_discrete:
            return float(
                _eval_on(self.mark_density, np.asarray(self.space.labels)).sum()
            )
        lo, hi = self.space.bounds
        return adaptive_quad(
            lambda x: _eval_on(self.mark_density, x), lo, hi, rtol=1e-12
        )

    def density_at(self, marks) -> np.ndarray:
        return _eval_on(self.mark_density, np.asarray(marks, dtype=float))

    def productivity_at(self, marks) -> np.ndarray:
        return _eval_on(self.productivity, np.asarray(marks, dtype=float))

    def beta_at(self, marks) -> np.ndarray:
        m = np.asarray(marks, dtype=float)
        if callable(self.beta):
            return _eval_on(self.beta, m)
        return np.full_like(m, self.beta)

    @property
    def has_constant_beta(self) -> bool:
        return not callable(self.beta)

    @property
    def has_constant_productivity(self) -> bool:
        return getattr(self.productivity, "constant_value", None) is not None

    def branching_integral(self) -> float:
        """Mean offspring per event, ``int f(m) xi(m) * mass(beta(m)) dmu(m)``."""

        def integrand(m):
            return (
                self.density_at(m)
                * self.productivity_at(m)
                * self.kernel.mass(self.beta_at(m))
            )

        if self.space.is_discrete:
            return float(integrand(np.asarray(self.space.labels, dtype=float)).sum())
        lo, hi = self.space.bounds
        return adaptive_quad(integrand, lo, hi, rtol=1e-10)
