"""Derive the nondominated f1 intervals of the ZDT3 trade-off curve.

With g = 1 the curve is f2(x) = 1 - sqrt(x) - x * sin(10 * pi * x) over
x in [0, 1]. The curve oscillates, so only five disconnected x-intervals
are mutually nondominated. Each interval ends at a local minimum of f2;
it starts either at 0 or at the first x on the next descending branch
where f2 drops below the previous minimum.

Run:  python scripts/derive_zdt3_front.py
Prints the five [start, end] pairs to 12 decimals. The constants frozen
in raceopt.problems come from this output.
"""
from __future__ import annotations

import numpy as np


def f2(x: float) -> float:
    return 1.0 - np.sqrt(x) - x * np.sin(10.0 * np.pi * x)


def df2(x: float) -> float:
    return (
        -0.5 / np.sqrt(x)
        - np.sin(10.0 * np.pi * x)
        - 10.0 * np.pi * x * np.cos(10.0 * np.pi * x)
    )


def bisect(fn, lo: float, hi: float, tol: float = 1e-14) -> float:
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def critical_points() -> list[float]:
    grid = np.linspace(1e-9, 1.0, 200001)
    vals = np.array([df2(x) for x in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0 or fa * fb < 0.0:
            roots.append(bisect(df2, a, b))
    return roots


def main() -> None:
    crits = critical_points()
    minima = [x for x in crits if df2(x - 1e-9) < 0.0 < df2(x + 1e-9)]
    maxima = [x for x in crits if df2(x - 1e-9) > 0.0 > df2(x + 1e-9)]
    assert len(minima) == 5, minima

    intervals = [(0.0, minima[0])]
    for i in range(1, 5):
        floor = f2(minima[i - 1])
        lo = maxima[i - 1]
        start = bisect(lambda x: f2(x) - floor, lo, minima[i])
        # Step just past the root so the interval start lies strictly below
        # the previous minimum; otherwise the boundary sample would be
        # weakly dominated by it.
        while f2(start) >= floor:
            start = np.nextafter(start, 1.0)
        intervals.append((start, minima[i]))

    # Sanity: every interval start undercuts all earlier minima, so the
    # segments are mutually nondominated.
    for i, (a, b) in enumerate(intervals):
        for j in range(i):
            assert f2(b) < f2(intervals[j][1]), (i, j)

    for a, b in intervals:
        print(f"({float(a)!r}, {float(b)!r}),")


if __name__ == "__main__":
    main()
