"""Bilinear Haar paraproducts, their coefficient rearrangements, and the
nine-block splitting of pointwise multiplication.

The general form pairs a symbol spectrum phi with an argument f through

    sum_R  phi_R * <f, d1_I (x) d2_J> * b1_I(s) b2_J(t),

where each factor d/b is either the Haar function h or the normalised
indicator chi/|.| of the same interval.  The four supported signatures take
the inner factor to be the complement of the outer one in each axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    GenerationIndex,
    GridFunction2D,
    HaarSpectrum2D,
    _analysis_axis0,
    block_means_axis0,
    block_means_axis1,
    haar_forward_2d,
    haar_inverse_2d,
    mean_pyramid,
)
from .errors import DepthMismatchError, UnsupportedSignatureError


@dataclass(frozen=True)
class Signature:
    """Configuration (eps, delta, beta) of the general bilinear form.

    Supported: eps == (0,0) and delta the componentwise complement of beta.
    """

    eps: tuple
    delta: tuple
    beta: tuple

    def __post_init__(self):
        for name, v in (("eps", self.eps), ("delta", self.delta), ("beta", self.beta)):
            if tuple(v) not in {(0, 0), (0, 1), (1, 0), (1, 1)}:
                raise UnsupportedSignatureError(f"{name} must be a 0/1 pair, got {v}")
        if tuple(self.eps) != (0, 0):
            raise UnsupportedSignatureError(
                f"unsupported signature: eps={self.eps} (only (0,0) is supported)"
            )
        expected = (1 - self.beta[0], 1 - self.beta[1])
        if tuple(self.delta) != expected:
            raise UnsupportedSignatureError(
                f"unsupported signature: delta={self.delta} must complement beta={self.beta}"
            )

    @classmethod
    def from_beta(cls, beta) -> "Signature":
        beta = tuple(beta)
        return cls((0, 0), (1 - beta[0], 1 - beta[1]), beta)


#: main paraproduct: coefficients paired with rectangle means, Haar output
PI = Signature.from_beta((0, 0))
#: adjoint: coefficients paired with coefficients, indicator output
DELTA = Signature.from_beta((1, 1))
#: mixed: Haar in s, indicator in t
PI_01 = Signature.from_beta((0, 1))
#: mixed: indicator in s, Haar in t
PI_10 = Signature.from_beta((1, 0))

_SIG_BY_NAME = {"pi": PI, "delta": DELTA, "pi01": PI_01, "pi10": PI_10}


def signature_by_name(name: str) -> Signature:
    key = "".join(ch for ch in name.lower() if ch.isalnum())
    try:
        return _SIG_BY_NAME[key]
    except KeyError:
        raise UnsupportedSignatureError(f"unknown signature name {name!r}")


@lru_cache(maxsize=256)
def _axis_pattern(n: int, j: int, beta: int) -> np.ndarray:
    """Per-cell values of the level-j outer factor, same for every position.

    beta == 0: Haar, -2^(j/2) on the left half of each interval, + on the
    right.  beta == 1: normalised indicator, constant 2^j.
    """
    if beta == 1:
        return np.full(n, float(1 << j))
    w = n >> j
    tile = np.empty(w)
    tile[: w // 2] = -(2.0 ** (j / 2.0))
    tile[w // 2:] = 2.0 ** (j / 2.0)
    return np.tile(tile, 1 << j)


def _accumulate_generation(out: np.ndarray, coef: np.ndarray, j1: int, j2: int, beta) -> None:
    """out += sum over generation-(j1,j2) rectangles of coef * b1_I (x) b2_J."""
    if not coef.any():
        return
    n1, n2 = out.shape
    expanded = np.repeat(np.repeat(coef, n1 >> j1, axis=0), n2 >> j2, axis=1)
    p1 = _axis_pattern(n1, j1, beta[0])
    p2 = _axis_pattern(n2, j2, beta[1])
    out += expanded * (p1[:, None] * p2[None, :])


def _haar_t_then_mean_s(values: np.ndarray):
    """out[j1][i1, b2] = mean over the level-j1 s-interval i1 of the
    t-Haar coefficient b2 of the slice f(s, .)."""
    t_coeffs = _analysis_axis0(values.T).T
    return block_means_axis0(t_coeffs)


def _haar_s_then_mean_t(values: np.ndarray):
    """out[j2][b1, i2] = mean over the level-j2 t-interval i2 of the
    s-Haar coefficient b1 of the slice f(., t)."""
    s_coeffs = _analysis_axis0(values)
    return block_means_axis1(s_coeffs)


def _inner_coefficient_blocks(delta, f: GridFunction2D):
    """Per-generation arrays of <f, d1_I (x) d2_J> for the inner factor."""
    j1d, j2d = f.depth
    if delta == (1, 1):  # rectangle means
        pyr = mean_pyramid(f.values)
        return lambda j1, j2: pyr[j1][j2]
    if delta == (0, 0):  # plain Haar coefficients
        spec = haar_forward_2d(f)
        return lambda j1, j2: spec.generation_block(j1, j2)
    if delta == (1, 0):  # s-mean of the t-Haar slice coefficient
        tbl = _haar_t_then_mean_s(f.values)
        return lambda j1, j2: tbl[j1][:, (1 << j2):(2 << j2)]
    if delta == (0, 1):  # t-mean of the s-Haar slice coefficient
        tbl = _haar_s_then_mean_t(f.values)
        return lambda j1, j2: tbl[j2][(1 << j1):(2 << j1), :]
    raise UnsupportedSignatureError(f"unsupported delta {delta}")


def paraproduct(sig: Signature, phi: HaarSpectrum2D, f: GridFunction2D) -> GridFunction2D:
    """Evaluate the bilinear form of the given signature on the grid.

    The sum runs over all hh rectangles of the symbol; the result is exact
    (piecewise constant at the common depth).
    """
    if phi.depth != f.depth:
        raise DepthMismatchError(f"depth mismatch: {phi.depth} vs {f.depth}")
    j1d, j2d = phi.depth
    inner = _inner_coefficient_blocks(tuple(sig.delta), f)
    out = np.zeros((1 << j1d, 1 << j2d))
    beta = tuple(sig.beta)
    for j1 in range(j1d):
        for j2 in range(j2d):
            sym = phi.generation_block(j1, j2)
            if not sym.any():
                continue
            _accumulate_generation(out, sym * inner(j1, j2), j1, j2, beta)
    return GridFunction2D(f.depth, out)


# ---------------------------------------------------------------------------
# coefficient rearrangements
# ---------------------------------------------------------------------------

def sigma_k(b: HaarSpectrum2D, k) -> HaarSpectrum2D:
    """Aggregate fine-scale hh mass onto the boundary generations of k.

    Coefficients strictly coarser than k in both axes are kept; mass at or
    beyond the boundary level in an axis is l2-aggregated onto the level-k
    ancestor in that axis; everything else lands in the corner aggregate.
    Non-hh blocks are zeroed.  Preserves the l2 norm of the hh block.
    """
    if isinstance(k, GenerationIndex):
        k1, k2 = k.j1, k.j2
    else:
        k1, k2 = k
    if k1 < 0 or k2 < 0:
        raise ValueError("generation indices must be >= 0")
    j1d, j2d = b.depth
    out = np.zeros_like(b.coeffs)
    acc = np.zeros_like(b.coeffs)  # squared mass routed to boundary slots
    for j1 in range(j1d):
        for j2 in range(j2d):
            block = b.generation_block(j1, j2)
            if not block.any():
                continue
            if j1 < k1 and j2 < k2:
                out[(1 << j1):(2 << j1), (1 << j2):(2 << j2)] = block
            elif j1 < k1:  # j2 >= k2: aggregate along t onto level k2
                agg = (block ** 2).reshape(1 << j1, 1 << k2, -1).sum(axis=2)
                acc[(1 << j1):(2 << j1), (1 << k2):(2 << k2)] += agg
            elif j2 < k2:  # j1 >= k1: aggregate along s onto level k1
                agg = (
                    (block ** 2)
                    .reshape(1 << k1, -1, 1 << j2)
                    .sum(axis=1)
                )
                acc[(1 << k1):(2 << k1), (1 << j2):(2 << j2)] += agg
            else:  # both at or beyond the boundary
                agg = (
                    (block ** 2)
                    .reshape(1 << k1, 1 << (j1 - k1), 1 << k2, 1 << (j2 - k2))
                    .sum(axis=(1, 3))
                )
                acc[(1 << k1):(2 << k1), (1 << k2):(2 << k2)] += agg
    out += np.sqrt(acc)
    return HaarSpectrum2D(b.depth, out)


def sigma1_k(b: HaarSpectrum2D, k: int) -> HaarSpectrum2D:
    """One-axis analogue of :func:`sigma_k`, aggregating the s-variable only.

    The t-structure is untouched; non-hh blocks are zeroed.
    """
    if k < 0:
        raise ValueError("level must be >= 0")
    j1d, j2d = b.depth
    out = np.zeros_like(b.coeffs)
    acc = np.zeros_like(b.coeffs)
    for j1 in range(j1d):
        rows = slice(1 << j1, 2 << j1)
        block = b.coeffs[rows, 1:]
        if not block.any():
            continue
        if j1 < k:
            out[rows, 1:] = block
        else:
            agg = (block ** 2).reshape(1 << k, -1, block.shape[1]).sum(axis=1)
            acc[(1 << k):(2 << k), 1:] += agg
    out += np.sqrt(acc)
    return HaarSpectrum2D(b.depth, out)


# ---------------------------------------------------------------------------
# nine-block splitting of the multiplication operator
# ---------------------------------------------------------------------------

FINER = "finer"
EQUAL = "equal"
COARSER = "coarser"

_RELATIONS = (FINER, EQUAL, COARSER)


@dataclass(frozen=True)
class NinePartTag:
    """Block of matrix elements <phi * h_(I,J), h_(I',J')> classified by the
    strict containment / equality of (I' vs I, J' vs J).

    The relation names the OUTPUT interval against the input one; outputs
    that are constant in an axis are absorbed into the coarser relation of
    that axis (the indicator-type blocks).
    """

    s_relation: str
    t_relation: str

    def __post_init__(self):
        if self.s_relation not in _RELATIONS or self.t_relation not in _RELATIONS:
            raise ValueError(f"relations must be one of {_RELATIONS}")


ALL_NINE_TAGS = tuple(
    NinePartTag(s, t) for s in _RELATIONS for t in _RELATIONS
)

#: conventional names of the nine blocks
NINE_PART_NAMES = {
    NinePartTag(FINER, FINER): "pi",
    NinePartTag(COARSER, COARSER): "delta",
    NinePartTag(FINER, COARSER): "pi01",
    NinePartTag(COARSER, FINER): "pi10",
    NinePartTag(EQUAL, EQUAL): "rr",
    NinePartTag(FINER, EQUAL): "pi_r",
    NinePartTag(COARSER, EQUAL): "delta_r",
    NinePartTag(EQUAL, FINER): "r_pi",
    NinePartTag(EQUAL, COARSER): "r_delta",
}


def nine_part_apply(tag: NinePartTag, phi: HaarSpectrum2D, f: GridFunction2D) -> GridFunction2D:
    """Apply one block of the multiplication-by-phi operator to f.

    The blocks partition the matrix of pointwise multiplication over inputs
    in the hh span, so summing all nine applications reproduces phi * f on
    the grid whenever both phi and f lie in the hh span.
    """
    if phi.depth != f.depth:
        raise DepthMismatchError(f"depth mismatch: {phi.depth} vs {f.depth}")
    s_rel, t_rel = tag.s_relation, tag.t_relation
    if s_rel != EQUAL and t_rel != EQUAL:
        corner = {
            (FINER, FINER): PI,
            (COARSER, COARSER): DELTA,
            (FINER, COARSER): PI_01,
            (COARSER, FINER): PI_10,
        }[(s_rel, t_rel)]
        return paraproduct(corner, phi, f)

    j1d, j2d = phi.depth
    out = np.zeros((1 << j1d, 1 << j2d))
    phi_grid = haar_inverse_2d(phi)

    if (s_rel, t_rel) == (EQUAL, EQUAL):
        # diagonal block: sum_R f_R m_R(phi) h_R
        f_spec = haar_forward_2d(f)
        pyr = mean_pyramid(phi_grid.values)
        for j1 in range(j1d):
            for j2 in range(j2d):
                coef = f_spec.generation_block(j1, j2) * pyr[j1][j2]
                _accumulate_generation(out, coef, j1, j2, (0, 0))
        return GridFunction2D(f.depth, out)

    if t_rel == EQUAL:
        # phi enters through the t-mean of its s-Haar slice coefficient
        phi_tbl = _haar_s_then_mean_t(phi_grid.values)  # [j2][b1, i2]
        if s_rel == FINER:
            f_tbl = _haar_t_then_mean_s(f.values)  # [j1][i1, b2]
            for j1 in range(j1d):
                for j2 in range(j2d):
                    a = phi_tbl[j2][(1 << j1):(2 << j1), :]
                    bb = f_tbl[j1][:, (1 << j2):(2 << j2)]
                    _accumulate_generation(out, a * bb, j1, j2, (0, 0))
        else:  # COARSER in s: indicator output in s
            f_spec = haar_forward_2d(f)
            for j1 in range(j1d):
                for j2 in range(j2d):
                    a = phi_tbl[j2][(1 << j1):(2 << j1), :]
                    coef = a * f_spec.generation_block(j1, j2)
                    _accumulate_generation(out, coef, j1, j2, (1, 0))
        return GridFunction2D(f.depth, out)

    # s_rel == EQUAL: phi enters through the s-mean of its t-Haar coefficient
    phi_tbl = _haar_t_then_mean_s(phi_grid.values)  # [j1][i1, b2]
    if t_rel == FINER:
        f_tbl = _haar_s_then_mean_t(f.values)  # [j2][b1, i2]
        for j1 in range(j1d):
            for j2 in range(j2d):
                a = phi_tbl[j1][:, (1 << j2):(2 << j2)]
                bb = f_tbl[j2][(1 << j1):(2 << j1), :]
                _accumulate_generation(out, a * bb, j1, j2, (0, 0))
    else:  # COARSER in t: indicator output in t
        f_spec = haar_forward_2d(f)
        for j1 in range(j1d):
            for j2 in range(j2d):
                a = phi_tbl[j1][:, (1 << j2):(2 << j2)]
                coef = a * f_spec.generation_block(j1, j2)
                _accumulate_generation(out, coef, j1, j2, (0, 1))
    return GridFunction2D(f.depth, out)


def nine_part_sum(phi: HaarSpectrum2D, f: GridFunction2D) -> GridFunction2D:
    """Sum of all nine blocks; equals phi * f pointwise on hh-span inputs."""
    total = GridFunction2D.zeros(f.depth)
    for tag in ALL_NINE_TAGS:
        total = total + nine_part_apply(tag, phi, f)
    return total
