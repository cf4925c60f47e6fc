"""Dyadic Hilbert curve approximants [0,1] -> [0,1]^2."""

from __future__ import annotations

from fractions import Fraction

from .core import CubeAlgebra, DiagonalMorphism
from .pwa import PiecewiseAffineMap


def d2xy(side: int, d: int) -> tuple[int, int]:
    """Cell of the d-th step of the Hilbert order on a side x side grid."""
    x = y = 0
    s, t = 1, d
    while s < side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x, y = s - 1 - x, s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def hilbert_cells(level: int) -> list[tuple[int, int]]:
    side = 2 ** level
    return [d2xy(side, d) for d in range(side * side)]


def hilbert_map(level: int) -> PiecewiseAffineMap:
    """Path through the cells in Hilbert order.

    The interval [k/4^l, (k+1)/4^l] runs from the midpoint of the edge
    shared with the previous cell, through the cell centre, to the
    midpoint of the edge shared with the next one, so it stays inside
    the k-th cell. The path starts at (0,0) and ends at (1,0).
    """
    if level < 1:
        raise ValueError("level must be at least 1")
    cells = hilbert_cells(level)
    side = 2 ** level
    h = Fraction(1, side)
    n = len(cells)

    def centre(c):
        return ((c[0] + Fraction(1, 2)) * h, (c[1] + Fraction(1, 2)) * h)

    def shared_mid(a, b):
        ca, cb = centre(a), centre(b)
        return ((ca[0] + cb[0]) / 2, (ca[1] + cb[1]) / 2)

    xs, ys = [Fraction(0)], [(Fraction(0), Fraction(0))]
    for k, c in enumerate(cells):
        xs.append((k + Fraction(1, 2)) / n)
        ys.append(centre(c))
        xs.append(Fraction(k + 1, n))
        ys.append(shared_mid(c, cells[k + 1]) if k + 1 < n else (Fraction(1), Fraction(0)))
    return PiecewiseAffineMap.from_points(xs, ys)


def cell_masses(beta: PiecewiseAffineMap, level: int) -> dict[tuple[int, int], Fraction]:
    """Lebesgue mass pushed into each closed cell.

    The domain is cut at the breaks of beta and at the multiples of
    4^-level (collinear pieces may have been merged across cells). Each
    resulting interval must map into a single cell, otherwise ValueError.
    """
    side = 2 ** level
    grid = {Fraction(k, side * side) for k in range(side * side + 1)}
    cuts = sorted(grid.union(beta.breaks))
    out: dict[tuple[int, int], Fraction] = {}
    for x0, x1 in zip(cuts, cuts[1:]):
        mid = beta((x0 + x1) / 2)
        cell = tuple(min(int(v * side), side - 1) for v in mid)
        lo, hi = beta.restrict_image(x0, x1)
        if any(lo[i] < Fraction(cell[i], side) or hi[i] > Fraction(cell[i] + 1, side) for i in range(2)):
            raise ValueError(f"piece [{x0}, {x1}] leaves cell {cell}")
        out[cell] = out.get(cell, Fraction(0)) + (x1 - x0)
    return out


def cells_adjacent(level: int) -> bool:
    cells = hilbert_cells(level)
    return all(abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 for a, b in zip(cells, cells[1:]))


def hilbert_morphism(n: int, level: int) -> DiagonalMorphism:
    """f -> f o beta from C([0,1]^2, M_n) to C([0,1], M_n)."""
    return DiagonalMorphism(CubeAlgebra(2, n), CubeAlgebra(1, n), (hilbert_map(level),))
