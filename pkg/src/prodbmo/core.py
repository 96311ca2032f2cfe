"""Dyadic lattice combinatorics and exact Haar analysis on the unit square.

Everything lives at an explicit finite depth (J1, J2): functions are
piecewise constant on a 2^J1 x 2^J2 grid over [0,1)^2, and spectra collect
the coefficients of the tensor Haar basis

    { 1, h_I } x { 1, h_J },   h_I = |I|^{-1/2} (chi_{I+} - chi_{I-}),

where I+ is the RIGHT half of the dyadic interval I.  The 1-d basis index
b = 2^j + i encodes the interval at level j (length 2^-j), position i;
b = 0 is the constant.  A 2-d spectrum is stored as a dense array indexed
by the two 1-d basis indices, so cc = C[0,0], the s-Haar block is C[1:,0],
the t-Haar block is C[0,1:] and the rectangle (hh) block is C[1:,1:].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateRectangleError, DepthMismatchError, ValidationError

MAX_LEVEL = 30  # indices stay well inside int range


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """Dyadic subinterval of [0,1): [index * 2^-level, (index+1) * 2^-level)."""

    level: int
    index: int

    def __post_init__(self):
        if not (0 <= self.level <= MAX_LEVEL):
            raise ValidationError(f"interval level {self.level} out of range")
        if not (0 <= self.index < (1 << self.level)):
            raise ValidationError(
                f"interval index {self.index} out of range for level {self.level}"
            )

    @property
    def length(self) -> float:
        return 2.0 ** -self.level

    @property
    def left(self) -> float:
        return self.index * 2.0 ** -self.level

    @property
    def right(self) -> float:
        return (self.index + 1) * 2.0 ** -self.level

    def half_plus(self) -> "DyadicInterval":
        """Right half (the + half)."""
        return DyadicInterval(self.level + 1, 2 * self.index + 1)

    def half_minus(self) -> "DyadicInterval":
        """Left half (the - half)."""
        return DyadicInterval(self.level + 1, 2 * self.index)

    def parent(self) -> "DyadicInterval":
        if self.level == 0:
            raise ValidationError("the unit interval has no parent")
        return DyadicInterval(self.level - 1, self.index // 2)

    def ancestor(self, level: int) -> "DyadicInterval":
        if not 0 <= level <= self.level:
            raise ValidationError("ancestor level must be in [0, level]")
        return DyadicInterval(level, self.index >> (self.level - level))

    def contains(self, other: "DyadicInterval") -> bool:
        return other.level >= self.level and other.ancestor(self.level) == self

    @property
    def basis_index(self) -> int:
        return (1 << self.level) + self.index

    @classmethod
    def from_basis_index(cls, b: int) -> "DyadicInterval":
        if b < 1:
            raise ValidationError("basis index of an interval must be >= 1")
        level = b.bit_length() - 1
        return cls(level, b - (1 << level))


@dataclass(frozen=True, order=True)
class DyadicRect:
    """Dyadic rectangle I x J with I in the s-axis and J in the t-axis."""

    s_interval: DyadicInterval
    t_interval: DyadicInterval

    @property
    def area(self) -> float:
        return self.s_interval.length * self.t_interval.length

    @property
    def generation(self) -> "GenerationIndex":
        return GenerationIndex(self.s_interval.level, self.t_interval.level)

    def contains(self, other: "DyadicRect") -> bool:
        return self.s_interval.contains(other.s_interval) and self.t_interval.contains(
            other.t_interval
        )

    @classmethod
    def from_levels(cls, j1: int, i1: int, j2: int, i2: int) -> "DyadicRect":
        return cls(DyadicInterval(j1, i1), DyadicInterval(j2, i2))


@dataclass(frozen=True)
class GenerationIndex:
    """Pair of generation levels with the componentwise partial order."""

    j1: int
    j2: int

    def __post_init__(self):
        if self.j1 < 0 or self.j2 < 0:
            raise ValidationError("generation indices must be >= 0")

    def strictly_below(self, other: "GenerationIndex") -> bool:
        """self < other: strict in BOTH coordinates."""
        return self.j1 < other.j1 and self.j2 < other.j2

    def below(self, other: "GenerationIndex") -> bool:
        """self <= other componentwise."""
        return self.j1 <= other.j1 and self.j2 <= other.j2

    def as_tuple(self):
        return (self.j1, self.j2)


def _check_grid_shape(values, depth):
    j1, j2 = depth
    if not (1 <= j1 <= MAX_LEVEL and 1 <= j2 <= MAX_LEVEL):
        raise ValidationError(f"depth {depth} out of supported range")
    if values.shape != (1 << j1, 1 << j2):
        raise ValidationError(
            f"values shape {values.shape} does not match depth {depth}"
        )
    if not np.isfinite(values).all():
        raise ValidationError("grid values must be finite")


class GridFunction2D:
    """Piecewise-constant function on the 2^J1 x 2^J2 dyadic grid over [0,1)^2.

    Rows index s-cells, columns index t-cells; cell widths are 2^-J1 and
    2^-J2.  Treated as an immutable value: operations return new objects.
    """

    __slots__ = ("depth", "values")

    def __init__(self, depth, values):
        values = np.asarray(values, dtype=float)
        _check_grid_shape(values, tuple(depth))
        self.depth = tuple(depth)
        self.values = values

    @classmethod
    def zeros(cls, depth) -> "GridFunction2D":
        j1, j2 = depth
        return cls(depth, np.zeros((1 << j1, 1 << j2)))

    @classmethod
    def constant(cls, depth, value) -> "GridFunction2D":
        j1, j2 = depth
        return cls(depth, np.full((1 << j1, 1 << j2), float(value)))

    @property
    def cell_area(self) -> float:
        return 2.0 ** -(self.depth[0] + self.depth[1])

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def norm_l2_sq(self) -> float:
        return float((self.values ** 2).sum() * self.cell_area)

    def __add__(self, other):
        self._check_same_depth(other)
        return GridFunction2D(self.depth, self.values + other.values)

    def __sub__(self, other):
        self._check_same_depth(other)
        return GridFunction2D(self.depth, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction2D(self.depth, self.values * float(scalar))

    __rmul__ = __mul__

    def multiply(self, other) -> "GridFunction2D":
        """Pointwise product (exact for piecewise-constant functions)."""
        self._check_same_depth(other)
        return GridFunction2D(self.depth, self.values * other.values)

    def _check_same_depth(self, other):
        if self.depth != other.depth:
            raise DepthMismatchError(
                f"depth mismatch: {self.depth} vs {other.depth}"
            )


class HaarSpectrum2D:
    """Coefficients of a grid function over the tensor Haar basis.

    The dense array ``coeffs`` is indexed by the two 1-d basis indices
    (see module docstring); Parseval holds exactly:
    ||f||_2^2 == (coeffs ** 2).sum().
    """

    __slots__ = ("depth", "coeffs")

    def __init__(self, depth, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        _check_grid_shape(coeffs, tuple(depth))
        self.depth = tuple(depth)
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, depth) -> "HaarSpectrum2D":
        j1, j2 = depth
        return cls(depth, np.zeros((1 << j1, 1 << j2)))

    @property
    def cc(self) -> float:
        return float(self.coeffs[0, 0])

    def hc_coef(self, interval: DyadicInterval) -> float:
        """Coefficient of h_I (x) 1."""
        return float(self.coeffs[interval.basis_index, 0])

    def ch_coef(self, interval: DyadicInterval) -> float:
        """Coefficient of 1 (x) h_J."""
        return float(self.coeffs[0, interval.basis_index])

    def hh_coef(self, rect: DyadicRect) -> float:
        """Coefficient of h_I (x) h_J."""
        return float(
            self.coeffs[rect.s_interval.basis_index, rect.t_interval.basis_index]
        )

    def hh_block(self) -> np.ndarray:
        """View of the rectangle block (valid indices b1, b2 >= 1)."""
        return self.coeffs[1:, 1:]

    def hh_energy(self) -> float:
        return float((self.coeffs[1:, 1:] ** 2).sum())

    def total_energy(self) -> float:
        return float((self.coeffs ** 2).sum())

    def hh_only(self) -> "HaarSpectrum2D":
        out = np.zeros_like(self.coeffs)
        out[1:, 1:] = self.coeffs[1:, 1:]
        return HaarSpectrum2D(self.depth, out)

    def generation_block(self, j1: int, j2: int) -> np.ndarray:
        """View of the hh coefficients of generation (j1, j2), shape (2^j1, 2^j2)."""
        return self.coeffs[(1 << j1):(2 << j1), (1 << j2):(2 << j2)]

    def with_hh_coef(self, rect: DyadicRect, value: float) -> "HaarSpectrum2D":
        out = self.coeffs.copy()
        out[rect.s_interval.basis_index, rect.t_interval.basis_index] = value
        return HaarSpectrum2D(self.depth, out)

    def copy(self) -> "HaarSpectrum2D":
        return HaarSpectrum2D(self.depth, self.coeffs.copy())

    def _check_same_depth(self, other):
        if self.depth != other.depth:
            raise DepthMismatchError(
                f"depth mismatch: {self.depth} vs {other.depth}"
            )


# ---------------------------------------------------------------------------
# fast 1-d pyramid transforms (vectorised over the other axis)
# ---------------------------------------------------------------------------

def _analysis_axis0(v: np.ndarray) -> np.ndarray:
    """Orthonormal Haar analysis along axis 0 of a cell-value array."""
    n = v.shape[0]
    depth = n.bit_length() - 1
    out = np.empty_like(v)
    integ = v / n  # cell integrals, cell width 2^-depth
    for j in range(depth - 1, -1, -1):
        left = integ[0::2]
        right = integ[1::2]
        out[(1 << j):(2 << j)] = (2.0 ** (j / 2.0)) * (right - left)
        integ = left + right
    out[0] = integ[0]
    return out


def _synthesis_axis0(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_analysis_axis0`."""
    n = c.shape[0]
    depth = n.bit_length() - 1
    means = c[0:1].copy()
    for j in range(depth):
        coef = c[(1 << j):(2 << j)]
        nxt = np.empty((2 << j,) + c.shape[1:], dtype=float)
        step = (2.0 ** (j / 2.0)) * coef
        nxt[0::2] = means - step
        nxt[1::2] = means + step
        means = nxt
    return means


def haar_forward_2d(f: GridFunction2D) -> HaarSpectrum2D:
    """Full tensor Haar analysis of a grid function."""
    c = _analysis_axis0(_analysis_axis0(f.values.T).T)
    return HaarSpectrum2D(f.depth, c)


def haar_inverse_2d(c: HaarSpectrum2D) -> GridFunction2D:
    """Synthesis back to cell values; exact inverse of :func:`haar_forward_2d`."""
    v = _synthesis_axis0(_synthesis_axis0(c.coeffs.T).T)
    return GridFunction2D(c.depth, v)


@lru_cache(maxsize=64)
def level_of_basis_index(n: int) -> np.ndarray:
    """level_of[b] for b in [0, n); entry 0 is -1 (the constant)."""
    out = np.full(n, -1, dtype=np.int64)
    for b in range(1, n):
        out[b] = b.bit_length() - 1
    return out


# ---------------------------------------------------------------------------
# rectangle means via prefix sums
# ---------------------------------------------------------------------------

class PrefixTable:
    """Cumulative cell sums with a guard row/column for O(1) rectangle sums."""

    __slots__ = ("depth", "_cum")

    def __init__(self, f: GridFunction2D):
        self.depth = f.depth
        n1, n2 = f.values.shape
        cum = np.zeros((n1 + 1, n2 + 1))
        cum[1:, 1:] = f.values.cumsum(axis=0).cumsum(axis=1)
        self._cum = cum

    def cell_sum(self, s_lo: int, s_hi: int, t_lo: int, t_hi: int) -> float:
        """Sum of cell values over [s_lo, s_hi) x [t_lo, t_hi)."""
        c = self._cum
        return float(c[s_hi, t_hi] - c[s_lo, t_hi] - c[s_hi, t_lo] + c[s_lo, t_lo])


def rect_mean(p: PrefixTable, s_range, t_range) -> float:
    """Exact average of the underlying function over a cell-aligned rectangle.

    Ranges are half-open cell-index pairs (lo, hi).
    """
    s_lo, s_hi = s_range
    t_lo, t_hi = t_range
    n1, n2 = 1 << p.depth[0], 1 << p.depth[1]
    if not (0 <= s_lo < s_hi <= n1 and 0 <= t_lo < t_hi <= n2):
        raise DegenerateRectangleError("degenerate rectangle")
    count = (s_hi - s_lo) * (t_hi - t_lo)
    return p.cell_sum(s_lo, s_hi, t_lo, t_hi) / count


def dyadic_rect_mean(p: PrefixTable, rect: DyadicRect) -> float:
    """Average over a dyadic rectangle (must be within the grid depth)."""
    j1, j2 = rect.s_interval.level, rect.t_interval.level
    J1, J2 = p.depth
    if j1 > J1 or j2 > J2:
        raise ValidationError("rectangle finer than the grid")
    w1, w2 = 1 << (J1 - j1), 1 << (J2 - j2)
    i1, i2 = rect.s_interval.index, rect.t_interval.index
    return rect_mean(p, (i1 * w1, (i1 + 1) * w1), (i2 * w2, (i2 + 1) * w2))


def mean_pyramid(values: np.ndarray):
    """All block means: out[j1][j2] has shape (2^j1, 2^j2), entry = mean over
    the dyadic rectangle at generation (j1, j2)."""
    rows = [values]
    while rows[-1].shape[0] > 1:
        a = rows[-1]
        rows.append(0.5 * (a[0::2] + a[1::2]))
    rows.reverse()  # rows[j1]: means over s-intervals of level j1, per t-cell
    out = []
    for a in rows:
        cols = [a]
        while cols[-1].shape[1] > 1:
            b = cols[-1]
            cols.append(0.5 * (b[:, 0::2] + b[:, 1::2]))
        cols.reverse()
        out.append(cols)
    return out


def block_means_axis0(v: np.ndarray):
    """List over levels j = 0..J of v block-averaged along axis 0 to 2^j rows."""
    rows = [v]
    while rows[-1].shape[0] > 1:
        a = rows[-1]
        rows.append(0.5 * (a[0::2] + a[1::2]))
    rows.reverse()
    return rows


def block_means_axis1(v: np.ndarray):
    return [a.T for a in block_means_axis0(v.T)]


# ---------------------------------------------------------------------------
# projections on the rectangle block
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionSelector:
    """Tagged choice of an idempotent diagonal action on the hh block.

    All selectors zero the cc/hc/ch blocks (the martingale calculus acts on
    the mean-zero-in-each-variable component).  Index arguments beyond the
    depth act as zero/identity through the generation masks.
    """

    kind: str
    j1: int = 0
    j2: int = 0
    mask: tuple = None  # open-set selector: flattened bool cell mask

    @classmethod
    def expectation(cls, j1, j2):
        """Keep generations strictly below (j1, j2) in both coordinates."""
        return cls("E", j1, j2)

    @classmethod
    def tail(cls, j1, j2):
        """Keep generations >= (j1, j2) in both coordinates."""
        return cls("Q", j1, j2)

    @classmethod
    def difference(cls, j1, j2):
        """Keep exactly generation (j1, j2)."""
        return cls("D", j1, j2)

    @classmethod
    def e1(cls, i):
        return cls("E1", i, 0)

    @classmethod
    def q1(cls, i):
        return cls("Q1", i, 0)

    @classmethod
    def e2(cls, j):
        return cls("E2", 0, j)

    @classmethod
    def q2(cls, j):
        return cls("Q2", 0, j)

    @classmethod
    def band(cls, n, k):
        """Keep generations with j1 in [2^n - 1, 2^(n+1) - 2] and likewise j2."""
        return cls("band", n, k)

    @classmethod
    def tail_band(cls, n, k):
        """Keep generations with j1 >= 2^n - 1 and j2 >= 2^k - 1."""
        return cls("tailband", n, k)

    @classmethod
    def open_set(cls, cell_mask: np.ndarray):
        """Keep hh coefficients of rectangles whose cells all lie in the mask."""
        m = np.asarray(cell_mask, dtype=bool)
        return cls("openset", m.shape[0], m.shape[1], tuple(m.reshape(-1).tolist()))

    def open_set_mask(self) -> np.ndarray:
        if self.kind != "openset":
            raise ValidationError("not an open-set selector")
        return np.array(self.mask, dtype=bool).reshape(self.j1, self.j2)


def apply_projection(c: HaarSpectrum2D, sel: ProjectionSelector) -> HaarSpectrum2D:
    """Apply a projection selector; output keeps only the selected hh part."""
    n1, n2 = c.coeffs.shape
    k = sel.kind
    if k == "openset":
        return _apply_open_set(c, sel.open_set_mask())
    lv1 = level_of_basis_index(n1)
    lv2 = level_of_basis_index(n2)
    if k == "E":
        m1, m2 = lv1 < sel.j1, lv2 < sel.j2
    elif k == "Q":
        m1, m2 = lv1 >= sel.j1, lv2 >= sel.j2
    elif k == "D":
        m1, m2 = lv1 == sel.j1, lv2 == sel.j2
    elif k == "E1":
        m1, m2 = lv1 < sel.j1, np.ones(n2, bool)
    elif k == "Q1":
        m1, m2 = lv1 >= sel.j1, np.ones(n2, bool)
    elif k == "E2":
        m1, m2 = np.ones(n1, bool), lv2 < sel.j2
    elif k == "Q2":
        m1, m2 = np.ones(n1, bool), lv2 >= sel.j2
    elif k == "band":
        lo1, hi1 = (1 << sel.j1) - 1, (1 << (sel.j1 + 1)) - 2
        lo2, hi2 = (1 << sel.j2) - 1, (1 << (sel.j2 + 1)) - 2
        m1 = (lv1 >= lo1) & (lv1 <= hi1)
        m2 = (lv2 >= lo2) & (lv2 <= hi2)
    elif k == "tailband":
        m1 = lv1 >= (1 << sel.j1) - 1
        m2 = lv2 >= (1 << sel.j2) - 1
    else:
        raise ValidationError(f"unknown selector kind {k!r}")
    m1 = m1 & (lv1 >= 0)
    m2 = m2 & (lv2 >= 0)
    out = np.zeros_like(c.coeffs)
    sel2d = np.outer(m1, m2)
    out[sel2d] = c.coeffs[sel2d]
    return HaarSpectrum2D(c.depth, out)


def _apply_open_set(c: HaarSpectrum2D, mask: np.ndarray) -> HaarSpectrum2D:
    j1d, j2d = c.depth
    if mask.shape != (1 << j1d, 1 << j2d):
        raise ValidationError("open-set mask shape does not match depth")
    counts = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1))
    counts[1:, 1:] = mask.astype(float).cumsum(axis=0).cumsum(axis=1)
    out = np.zeros_like(c.coeffs)
    for j1 in range(j1d):
        w1 = 1 << (j1d - j1)
        for j2 in range(j2d):
            w2 = 1 << (j2d - j2)
            block = c.generation_block(j1, j2)
            s_lo = np.arange(1 << j1) * w1
            t_lo = np.arange(1 << j2) * w2
            full = (
                counts[np.ix_(s_lo + w1, t_lo + w2)]
                - counts[np.ix_(s_lo, t_lo + w2)]
                - counts[np.ix_(s_lo + w1, t_lo)]
                + counts[np.ix_(s_lo, t_lo)]
            ) == w1 * w2
            tgt = out[(1 << j1):(2 << j1), (1 << j2):(2 << j2)]
            tgt[full] = block[full]
    return HaarSpectrum2D(c.depth, out)


def square_function(c: HaarSpectrum2D) -> GridFunction2D:
    """S[f] = (sum_R chi_R / |R| * |f_R|^2)^(1/2) over the hh block."""
    j1d, j2d = c.depth
    n1, n2 = 1 << j1d, 1 << j2d
    s2 = np.zeros((n1, n2))
    for j1 in range(j1d):
        for j2 in range(j2d):
            block = c.generation_block(j1, j2)
            if not block.any():
                continue
            contrib = (block ** 2) * (2.0 ** (j1 + j2))
            s2 += np.repeat(
                np.repeat(contrib, n1 >> j1, axis=0), n2 >> j2, axis=1
            )
    return GridFunction2D(c.depth, np.sqrt(s2))


def conditional_expectation_grid(f: GridFunction2D, j1: int, j2: int) -> GridFunction2D:
    """Average f over the dyadic rectangles of generation (j1, j2).

    Generations at or beyond the depth leave the grid unchanged.
    """
    J1, J2 = f.depth
    j1 = min(j1, J1)
    j2 = min(j2, J2)
    means = mean_pyramid(f.values)[j1][j2]
    vals = np.repeat(np.repeat(means, 1 << (J1 - j1), axis=0), 1 << (J2 - j2), axis=1)
    return GridFunction2D(f.depth, vals)
