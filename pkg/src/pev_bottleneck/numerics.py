"""Composite trapezoid quadrature and monotone bisection."""

from __future__ import annotations

import math

import numpy as np


class BracketError(ValueError):
    """Target value not bracketed by the search interval."""


class MonotonicityError(ArithmeticError):
    """A map assumed nondecreasing was observed decreasing."""


def quadrature(fn, a: float, b: float, nodes=(), dt: float = 0.01) -> float:
    """
    Composite trapezoid rule for ``fn`` on ``[a, b]``.

    ``nodes`` inside ``(a, b)`` split the interval; each sub-interval is
    integrated separately with panels no wider than ``dt``.  The end points of
    every sub-interval are pulled inward by a relative 1e-12 so that ``fn`` is
    evaluated on the correct side of a jump located at a node.

    ``fn`` must accept and return numpy arrays.
    """
    if b < a:
        raise ValueError(f"quadrature needs a <= b, got a={a}, b={b}")
    if b == a:
        return 0.0
    inner = sorted(x for x in set(float(n) for n in nodes) if a < x < b)
    edges = [a, *inner, b]
    total = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        width = x1 - x0
        if width <= 0:
            continue
        n = max(1, int(math.ceil(width / dt - 1e-9)))
        x = np.linspace(x0, x1, n + 1)
        nudge = 1e-12 * max(width, abs(x0), abs(x1))
        x[0] += nudge
        x[-1] -= nudge
        y = np.asarray(fn(x), dtype=float)
        total += float(np.trapezoid(y, dx=width / n))
    return total


def bisect_monotone(fn, lo: float, hi: float, target: float, tol: float,
                    max_iter: int = 200) -> float:
    """
    Solve ``fn(x) = target`` for a nondecreasing scalar ``fn`` on ``[lo, hi]``.

    Stops once ``|fn(x) - target| <= tol``.  Every probe is checked against
    the current bracket values; a probe that falls outside them raises
    :class:`MonotonicityError`.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo > f_hi:
        raise MonotonicityError(f"fn(lo)={f_lo} > fn(hi)={f_hi}")
    if abs(f_lo - target) <= tol:
        return lo
    if abs(f_hi - target) <= tol:
        return hi
    if not f_lo <= target <= f_hi:
        raise BracketError(f"target {target} not in [{f_lo}, {f_hi}]")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if not f_lo <= f_mid <= f_hi:
            raise MonotonicityError(
                f"fn({mid})={f_mid} outside bracket values [{f_lo}, {f_hi}]"
            )
        if abs(f_mid - target) <= tol:
            return mid
        if f_mid < target:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)
