"""Continuous piecewise-affine maps [0,1] -> [0,1]^p with rational data."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Sequence

from ..extq import StructuralError, to_rational

Vec = tuple[Fraction, ...]


def _q(v) -> Fraction:
    """Signed rational; floats are refused to keep everything exact."""
    if isinstance(v, float):
        raise TypeError("floats are not accepted; pass a Fraction or a string")
    return Fraction(v)


@dataclass(frozen=True)
class PiecewiseAffineMap:
    """On piece i, t(x) = slope[i] * x + intercept[i] (coordinatewise).

    ``breaks`` is 0 = b_0 < ... < b_m = 1 and ``pieces[i]`` is a pair of
    p-vectors (slope, intercept). The constructor checks continuity and
    that the image stays in the unit cube.
    """

    breaks: tuple[Fraction, ...]
    pieces: tuple[tuple[Vec, Vec], ...]

    def __post_init__(self):
        b = tuple(to_rational(x) for x in self.breaks)
        pcs = tuple(
            (tuple(_q(v) for v in s), tuple(_q(v) for v in c))
            for s, c in self.pieces
        )
        if len(b) < 2 or b[0] != 0 or b[-1] != 1 or any(x >= y for x, y in zip(b, b[1:])):
            raise StructuralError("breakpoints must increase from 0 to 1")
        if len(pcs) != len(b) - 1:
            raise StructuralError("need one affine piece per interval")
        p = len(pcs[0][0])
        if p < 1 or any(len(s) != p or len(c) != p for s, c in pcs):
            raise StructuralError("inconsistent dimensions")
        b, pcs = _merge_equal(b, pcs)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "pieces", pcs)
        for i in range(1, len(pcs)):
            if self._eval(i - 1, b[i]) != self._eval(i, b[i]):
                raise StructuralError(f"discontinuity at {b[i]}")
        for i, x in enumerate(b[:-1]):
            for y in (self._eval(i, x), self._eval(i, b[i + 1])):
                if any(v < 0 or v > 1 for v in y):
                    raise StructuralError("image leaves the unit cube")

    @classmethod
    def _trusted(cls, breaks, pieces) -> "PiecewiseAffineMap":
        """Build without validation; for results of operations on valid maps."""
        breaks, pieces = _merge_equal(tuple(breaks), tuple(pieces))
        obj = object.__new__(cls)
        object.__setattr__(obj, "breaks", breaks)
        object.__setattr__(obj, "pieces", pieces)
        return obj

    def values_at(self, xs: Sequence[Fraction]) -> list[Vec]:
        """Values at increasing points, walking the pieces once."""
        out, i, last = [], 0, len(self.pieces) - 1
        for x in xs:
            while i < last and self.breaks[i + 1] <= x:
                i += 1
            out.append(self._eval(i, x))
        return out

    @property
    def dim(self) -> int:
        return len(self.pieces[0][0])

    def _eval(self, i: int, x: Fraction) -> Vec:
        s, c = self.pieces[i]
        return tuple(a * x + b for a, b in zip(s, c))

    def __call__(self, x) -> Vec:
        x = Fraction(x)
        if x < 0 or x > 1:
            raise ValueError("argument outside [0, 1]")
        i = min(bisect_right(self.breaks, x) - 1, len(self.pieces) - 1)
        return self._eval(i, x)

    def scalar(self, x) -> Fraction:
        return self(x)[0]

    @cached_property
    def _node_values(self) -> tuple[Vec, ...]:
        return tuple(self._eval(i, x) for i, x in enumerate(self.breaks[:-1])) + (
            self._eval(len(self.pieces) - 1, self.breaks[-1]),)

    def nodes(self) -> list[Vec]:
        return list(self._node_values)

    @cached_property
    def is_identity(self) -> bool:
        return len(self.pieces) == 1 and self.pieces[0] == ((Fraction(1),), (Fraction(0),))

    # --- constructors ------------------------------------------------------

    @classmethod
    def from_points(cls, xs: Sequence, ys: Sequence) -> "PiecewiseAffineMap":
        """Interpolate (xs[i], ys[i]); ys are scalars or p-vectors."""
        xs = [to_rational(x) for x in xs]
        ys = [tuple(_q(v) for v in (y if isinstance(y, (tuple, list)) else (y,))) for y in ys]
        pieces = []
        for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
            s = tuple((b - a) / (x1 - x0) for a, b in zip(y0, y1))
            c = tuple(a - sl * x0 for a, sl in zip(y0, s))
            pieces.append((s, c))
        return cls(tuple(xs), tuple(pieces))

    @classmethod
    def affine(cls, slope, intercept) -> "PiecewiseAffineMap":
        c = Fraction(intercept)
        return cls.from_points([0, 1], [c, c + Fraction(slope)])

    @classmethod
    def identity(cls) -> "PiecewiseAffineMap":
        return cls.from_points([0, 1], [0, 1])

    # --- operations --------------------------------------------------------

    def restrict_image(self, lo: Fraction, hi: Fraction) -> tuple[Vec, Vec]:
        """Coordinatewise min and max of t over [lo, hi]."""
        i0, i1 = bisect_right(self.breaks, lo), bisect_left(self.breaks, hi)
        vals = [self(lo), *self._node_values[i0:i1], self(hi)]
        p = self.dim
        return (
            tuple(min(v[k] for v in vals) for k in range(p)),
            tuple(max(v[k] for v in vals) for k in range(p)),
        )

    def max_cell_diameter(self, m: int) -> Fraction:
        """max over c of the image diameter of [c/m, (c+1)/m], in one sweep."""
        if len(self.pieces) == 1:
            return max(abs(v) for v in self.pieces[0][0]) / m
        pts = sorted(set(self.breaks) | {Fraction(c, m) for c in range(m + 1)})
        vals = self.values_at(pts)
        best, start = Fraction(0), 0
        for c in range(1, m + 1):
            end = pts.index(Fraction(c, m), start)
            seg = vals[start:end + 1]
            best = max(best, max(max(v[k] for v in seg) - min(v[k] for v in seg) for k in range(self.dim)))
            start = end
        return best

    def max_slope(self) -> Fraction:
        return max(abs(v) for sl, _ in self.pieces for v in sl)

    def image_box(self) -> tuple[Vec, Vec]:
        vals = self._node_values
        return (
            tuple(min(v[k] for v in vals) for k in range(self.dim)),
            tuple(max(v[k] for v in vals) for k in range(self.dim)),
        )

    def image_diameter(self, lo=Fraction(0), hi=Fraction(1)) -> Fraction:
        """Diameter of t([lo, hi]); the sup-norm (l-infinity) one when p = 2."""
        if lo == 0 and hi == 1:
            a, b = self.image_box()
        else:
            a, b = self.restrict_image(Fraction(lo), Fraction(hi))
        return max(y - x for x, y in zip(a, b))

    def after(self, inner: "PiecewiseAffineMap") -> "PiecewiseAffineMap":
        """self o inner, for a scalar inner map."""
        if inner.dim != 1:
            raise StructuralError("inner map must be scalar-valued")
        if inner.is_identity:
            return self
        if self.is_identity:
            return inner
        breaks, pieces = [Fraction(0)], []
        for i, (x0, x1) in enumerate(zip(inner.breaks, inner.breaks[1:])):
            (s,), (c,) = inner.pieces[i]
            if s == 0:
                cuts = [x0, x1]
            else:
                y0, y1 = s * x0 + c, s * x1 + c
                lo, hi = min(y0, y1), max(y0, y1)
                inside = [(b - c) / s for b in self.breaks[bisect_right(self.breaks, lo):bisect_left(self.breaks, hi)]]
                cuts = [x0, *sorted(inside), x1]
            for a, b in zip(cuts, cuts[1:]):
                y = s * ((a + b) / 2) + c
                j = min(bisect_right(self.breaks, y) - 1, len(self.pieces) - 1)
                S, C = self.pieces[j]
                pieces.append((tuple(v * s for v in S), tuple(v * c + w for v, w in zip(S, C))))
                breaks.append(b)
        return PiecewiseAffineMap._trusted(breaks, pieces)

    def sup_distance(self, other: "PiecewiseAffineMap") -> Fraction:
        """max over [0,1] of |self - other| (l-infinity in the cube); exact,
        since the difference is affine between merged breakpoints."""
        if other.dim != self.dim:
            raise StructuralError("dimension mismatch")
        xs = sorted(set(self.breaks) | set(other.breaks))
        return max(max(abs(a - b) for a, b in zip(u, v)) for u, v in zip(self.values_at(xs), other.values_at(xs)))

    def density_pieces(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        """Pushforward of Lebesgue measure: (lo, hi, 1/|slope|) per piece."""
        if self.dim != 1:
            raise StructuralError("densities are only defined for scalar maps")
        out = []
        ys = self._node_values
        for i in range(len(self.pieces)):
            (s,), _ = self.pieces[i]
            if s == 0:
                raise ValueError("non-absolutely-continuous pushforward (zero slope)")
            y0, y1 = ys[i][0], ys[i + 1][0]
            out.append((min(y0, y1), max(y0, y1), 1 / abs(s)))
        return out

    def integral(self) -> Fraction:
        """Exact integral of a scalar map over [0,1]."""
        ys = [self.scalar(x) for x in self.breaks]
        return sum(((y0 + y1) / 2 * (x1 - x0) for x0, x1, y0, y1 in
                    zip(self.breaks, self.breaks[1:], ys, ys[1:])), Fraction(0))

    def inverse(self) -> "PiecewiseAffineMap":
        """Inverse of a strictly increasing scalar homeomorphism of [0,1]."""
        if self.dim != 1:
            raise StructuralError("only scalar maps can be inverted")
        ys = [self.scalar(x) for x in self.breaks]
        if ys[0] != 0 or ys[-1] != 1 or any(a >= b for a, b in zip(ys, ys[1:])):
            raise StructuralError("not an increasing homeomorphism of [0, 1]")
        return PiecewiseAffineMap.from_points(ys, list(self.breaks))

    def is_homeomorphism(self) -> bool:
        ys = [self.scalar(x) for x in self.breaks] if self.dim == 1 else None
        return ys is not None and ys[0] == 0 and ys[-1] == 1 and all(a < b for a, b in zip(ys, ys[1:]))


def _merge_equal(breaks, pieces):
    if all(p != q for p, q in zip(pieces, pieces[1:])):
        return breaks, pieces
    nb, npcs = [breaks[0]], []
    for i, pc in enumerate(pieces):
        if npcs and npcs[-1] == pc:
            nb[-1] = breaks[i + 1]
        else:
            npcs.append(pc)
            nb.append(breaks[i + 1])
    return tuple(nb), tuple(npcs)


def subdivision_maps(m: int) -> tuple[PiecewiseAffineMap, ...]:
    """r_c(x) = (x + c - 1) / m for c = 1..m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return tuple(PiecewiseAffineMap.from_points([0, 1], [Fraction(c - 1, m), Fraction(c, m)]) for c in range(1, m + 1))


def zigzag(turns: Sequence[Fraction], start_low: bool = True) -> PiecewiseAffineMap:
    """Full sweeps of [0,1] alternating direction, turning at ``turns``.

    Each monotone sweep of the whole interval pushes its share of Lebesgue
    measure to a uniform density, so the map preserves Lebesgue measure.
    """
    xs = [Fraction(0)] + [to_rational(t) for t in turns] + [Fraction(1)]
    lo, hi = Fraction(0), Fraction(1)
    ys = [lo if (k % 2 == 0) == start_low else hi for k in range(len(xs))]
    return PiecewiseAffineMap.from_points(xs, ys)


def merge_density(parts, weight: Fraction = Fraction(1)) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Sum of piecewise-constant densities given as (lo, hi, value) triples."""
    delta: dict[Fraction, Fraction] = {Fraction(0): Fraction(0), Fraction(1): Fraction(0)}
    for lo, hi, val in parts:
        delta[lo] = delta.get(lo, Fraction(0)) + val
        delta[hi] = delta.get(hi, Fraction(0)) - val
    cuts = sorted(delta)
    merged: list[tuple[Fraction, Fraction, Fraction]] = []
    run = Fraction(0)
    for a, b in zip(cuts, cuts[1:]):
        run += delta[a]
        v = run * weight
        if merged and merged[-1][2] == v:
            merged[-1] = (merged[-1][0], b, v)
        else:
            merged.append((a, b, v))
    return merged
