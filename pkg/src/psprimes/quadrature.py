"""Adaptive Simpson quadrature with an explicit work stack."""

from __future__ import annotations

import math
from typing import Callable


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    rel_tol: float = 1e-9,
    abs_floor: float = 1e-15,
    max_depth: int = 60,
    max_evals: int = 2_000_000,
    initial_pieces: int = 16,
) -> float:
    """Integrate ``f`` over ``[a, b]``.

    An interval is accepted once its Richardson-corrected Simpson estimate
    changes by at most ``15 * max(rel_tol * |total|, abs_floor) * width``
    (the width factor distributes the global budget).  ``total`` is a coarse
    first-pass estimate, so the relative tolerance applies to the whole
    integral rather than to each piece.
    """
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(
            f, b, a, rel_tol=rel_tol, abs_floor=abs_floor, max_depth=max_depth,
            max_evals=max_evals, initial_pieces=initial_pieces,
        )
    width = b - a
    step = width / (2 * initial_pieces)
    xs = [a + i * step for i in range(2 * initial_pieces + 1)]
    xs[-1] = b
    ys = [f(x) for x in xs]
    evals = len(ys)
    pieces = []
    for i in range(initial_pieces):
        x0, x1, x2 = xs[2 * i], xs[2 * i + 1], xs[2 * i + 2]
        y0, y1, y2 = ys[2 * i], ys[2 * i + 1], ys[2 * i + 2]
        whole = (x2 - x0) / 6 * (y0 + 4 * y1 + y2)
        pieces.append((x0, x2, y0, y1, y2, whole, 0))
    scale = abs(math.fsum(p[5] for p in pieces))
    budget = max(rel_tol * scale, abs_floor)

    accepted = []
    stack = pieces[::-1]
    while stack:
        x0, x2, y0, y1, y2, whole, depth = stack.pop()
        x1 = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        yl, yr = f(xl), f(xr)
        evals += 2
        left = (x1 - x0) / 6 * (y0 + 4 * yl + y1)
        right = (x2 - x1) / 6 * (y1 + 4 * yr + y2)
        delta = left + right - whole
        tol = 15 * budget * (x2 - x0) / width
        if abs(delta) <= tol or (depth >= max_depth and abs(delta) <= 1e3 * tol):
            accepted.append(left + right + delta / 15)
            continue
        if depth >= max_depth or evals > max_evals:
            raise QuadratureError(
                f"no convergence on [{x0!r}, {x2!r}] after {evals} evaluations"
            )
        stack.append((x1, x2, y1, yr, y2, right, depth + 1))
        stack.append((x0, x1, y0, yl, y1, left, depth + 1))
    return math.fsum(accepted)
