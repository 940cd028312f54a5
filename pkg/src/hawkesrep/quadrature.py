"""Gauss-Legendre quadrature with node-doubling error control."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["QuadratureError", "fixed_quad", "adaptive_quad"]


class QuadratureError(RuntimeError):
    """Raised when node doubling fails to stabilise an integral."""


@lru_cache(maxsize=None)
def _base_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def rule(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating over ``[a, b]`` exactly for degree ``2n-1``."""
    x, w = _base_rule(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def fixed_quad(fn, a: float, b: float, n: int = 64) -> float:
    x, w = rule(n, a, b)
    return float(w @ np.asarray(fn(x), dtype=float))


def adaptive_quad(
    fn,
    a: float,
    b: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-14,
    n0: int = 32,
    max_n: int = 4096,
) -> float:
    """Integrate ``fn`` over ``[a, b]``, doubling the node count until stable.

    Stops when successive estimates agree within ``rtol`` (relative) or
    ``atol`` (absolute); raises :class:`QuadratureError` if ``max_n`` nodes
    are reached without agreement.
    """
    if not b > a:
        raise ValueError(f"empty integration interval [{a}, {b}]")
    n = int(n0)
    prev = fixed_quad(fn, a, b, n)
    while n < max_n:
        n *= 2
        cur = fixed_quad(fn, a, b, n)
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(
        f"integral did not stabilise within {max_n} nodes on [{a}, {b}]"
    )
