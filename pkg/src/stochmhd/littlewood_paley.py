"""Dyadic frequency decomposition, Besov norms, paraproducts, high/low cutoffs.

The radial cutoffs chi (ball) and rho (annulus) come from the usual dyadic
telescope rho(xi) = chi(xi/2) - chi(xi) built on a C^infinity transition
function, so the partition of unity chi + sum_j rho(2^-j xi) = 1 is exact at
every representable mode once j runs up to j_max = ceil(log2(n/2)).

The high/low pair (h, l) uses the same transition: h(r) = 0 for r <= 1/2,
h(r) = 1 for r >= 1, l = 1 - h.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from .grid import GridSpec, SpectralField, TensorField2, VectorField
from .spectral import from_padded_physical, to_padded_physical

__all__ = [
    "smooth_step",
    "chi_profile",
    "rho_profile",
    "high_profile",
    "low_profile",
    "LPConfig",
    "lp_block",
    "low_cutoff",
    "besov_norm",
    "besov_norm_vector",
    "freq_project",
    "freq_project_vector",
    "BonyTriple",
    "bony_decompose",
    "BlockDecomposition",
    "resonant_product",
]


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C^infinity monotone step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    return out


def chi_profile(r: np.ndarray) -> np.ndarray:
    """Ball cutoff: 1 for r <= 3/4, 0 for r >= 4/3, smooth and decreasing between."""
    return 1.0 - smooth_step((np.asarray(r, dtype=np.float64) - 0.75) / (4.0 / 3.0 - 0.75))


def rho_profile(r: np.ndarray) -> np.ndarray:
    """Annulus bump chi(r/2) - chi(r), supported in 3/4 <= r <= 8/3."""
    r = np.asarray(r, dtype=np.float64)
    return chi_profile(r / 2.0) - chi_profile(r)


def high_profile(r: np.ndarray) -> np.ndarray:
    """High-frequency plateau: 0 for r <= 1/2, 1 for r >= 1."""
    return smooth_step((np.asarray(r, dtype=np.float64) - 0.5) / 0.5)


def low_profile(r: np.ndarray) -> np.ndarray:
    return 1.0 - high_profile(r)


@dataclass(frozen=True)
class LPConfig:
    """Dyadic block symbols sampled on a grid's modes.

    Blocks are indexed j = -1 (ball) and j = 0..j_max (annuli); j_max is the
    smallest index for which the telescoped partition of unity is exact at
    every retained mode.
    """

    grid: GridSpec

    @property
    def j_max(self) -> int:
        return int(np.ceil(np.log2(self.grid.n // 2)))

    @property
    def block_indices(self) -> range:
        return range(-1, self.j_max + 1)

    def block_symbol(self, j: int) -> np.ndarray:
        if j < -1 or j > self.j_max:
            raise ValueError(f"block index {j} outside [-1, {self.j_max}]")
        return _block_symbols(self.grid)[j + 1]

    def low_symbol(self, i: int) -> np.ndarray:
        """Symbol of the partial sum over blocks -1 <= j <= i-1."""
        syms = _block_symbols(self.grid)
        out = np.zeros((self.grid.n, self.grid.n))
        for j in range(-1, min(i - 1, self.j_max) + 1):
            out = out + syms[j + 1]
        return out

    def partition_defect(self) -> float:
        syms = _block_symbols(self.grid)
        total = np.zeros((self.grid.n, self.grid.n))
        for s in syms:
            total = total + s
        return float(np.max(np.abs(total[self.grid.mode_mask] - 1.0)))


@lru_cache(maxsize=8)
def _block_symbols_cached(n: int, padding_factor: float) -> tuple[np.ndarray, ...]:
    grid = GridSpec(n, padding_factor)
    j_max = int(np.ceil(np.log2(n // 2)))
    r = grid.k_abs
    syms = [chi_profile(r)]
    for j in range(j_max + 1):
        syms.append(rho_profile(r / 2.0 ** j))
    return tuple(syms)


def _block_symbols(grid: GridSpec) -> tuple[np.ndarray, ...]:
    return _block_symbols_cached(grid.n, grid.padding_factor)


def lp_block(f: SpectralField, j: int, lp: LPConfig | None = None) -> SpectralField:
    """Dyadic block projection Delta_j f (j = -1 is the ball block)."""
    lp = lp or LPConfig(f.grid)
    return f.multiplier(lp.block_symbol(j))


def low_cutoff(f: SpectralField, i: int, lp: LPConfig | None = None) -> SpectralField:
    """Partial sum S_i f of blocks up to i-1."""
    if i < 0:
        raise ValueError(f"cutoff index must be >= 0, got {i}")
    lp = lp or LPConfig(f.grid)
    return f.multiplier(lp.low_symbol(i))


# ---------------------------------------------------------------------------
# Besov norms


def _block_lp_norm(block: SpectralField, p: float) -> float:
    if p == 2:
        return block.l2()
    phys = to_padded_physical(block)
    if np.isinf(p):
        return float(np.max(np.abs(phys)))
    return float(np.mean(np.abs(phys) ** p) ** (1.0 / p))


def besov_norm(f: SpectralField, s: float, p: float, q: float) -> float:
    """B^s_{p,q} norm: l^q over blocks of 2^{s m} ||Delta_m f||_{L^p}."""
    if not (p >= 1 and q >= 1):
        raise ValueError("integrability indices must be >= 1 (inf allowed)")
    lp = LPConfig(f.grid)
    terms = []
    for j in lp.block_indices:
        nj = _block_lp_norm(lp_block(f, j, lp), p)
        terms.append(2.0 ** (s * j) * nj)
    terms = np.asarray(terms)
    if np.isinf(q):
        return float(np.max(terms))
    return float(np.sum(terms ** q) ** (1.0 / q))


def besov_norm_vector(f: VectorField, s: float, p: float, q: float) -> float:
    return float(
        np.sqrt(besov_norm(f.c1, s, p, q) ** 2 + besov_norm(f.c2, s, p, q) ** 2)
    )


# ---------------------------------------------------------------------------
# high/low frequency projections


def freq_project(f: SpectralField, lam: float, which: str) -> SpectralField:
    """Smooth projection onto frequencies above (high) or below (low) lam."""
    if lam <= 0:
        raise ValueError(f"threshold must be positive, got {lam}")
    r = f.grid.k_abs / lam
    if which == "high":
        return f.multiplier(high_profile(r))
    if which == "low":
        return f.multiplier(low_profile(r))
    raise ValueError(f"which must be 'high' or 'low', got {which!r}")


def freq_project_vector(f: VectorField, lam: float, which: str) -> VectorField:
    return VectorField(freq_project(f.c1, lam, which), freq_project(f.c2, lam, which))


# ---------------------------------------------------------------------------
# Bony decomposition


@dataclass
class BonyTriple:
    """Frequency-ordered pieces of a product: low-high, high-low, resonant."""

    para_lt: object
    para_gt: object
    resonant: object

    def total(self):
        return self.para_lt + self.para_gt + self.resonant


class BlockDecomposition:
    """Padded physical samples of every dyadic block of a scalar field.

    cum[j] holds the running sum of blocks up to index j, so S_i = cum[i-1];
    near[j] holds the sum of blocks j-1, j, j+1 used by the resonant part.
    """

    def __init__(self, f: SpectralField, lp: LPConfig | None = None):
        lp = lp or LPConfig(f.grid)
        self.lp = lp
        m = f.grid.padded_n
        self.m = m
        self.blocks = [to_padded_physical(lp_block(f, j, lp), m) for j in lp.block_indices]
        self.cum = np.cumsum(self.blocks, axis=0)
        nb = len(self.blocks)
        self.near = []
        for a in range(nb):
            s = self.blocks[a].copy()
            if a > 0:
                s += self.blocks[a - 1]
            if a + 1 < nb:
                s += self.blocks[a + 1]
            self.near.append(s)

def _pairwise_phys(
    fb: BlockDecomposition, gb: BlockDecomposition, kind: str
) -> np.ndarray:
    """Accumulate the paraproduct (kind='lt'), reversed paraproduct ('gt'), or resonant ('res')."""
    m = fb.m
    acc = np.zeros((m, m))
    nb = len(fb.blocks)
    if kind == "res":
        for a in range(nb):
            acc += fb.blocks[a] * gb.near[a]
        return acc
    lowside, highside = (fb, gb) if kind == "lt" else (gb, fb)
    # block array offset a = j + 1; term j pairs blocks <= j-2 (cum[a-2]) with block j
    for a in range(2, nb):
        acc += lowside.cum[a - 2] * highside.blocks[a]
    return acc


def _scalar_bony(f: SpectralField, g: SpectralField, lp: LPConfig) -> BonyTriple:
    fb = BlockDecomposition(f, lp)
    gb = BlockDecomposition(g, lp)
    grid = f.grid
    return BonyTriple(
        from_padded_physical(grid, _pairwise_phys(fb, gb, "lt")),
        from_padded_physical(grid, _pairwise_phys(fb, gb, "gt")),
        from_padded_physical(grid, _pairwise_phys(fb, gb, "res")),
    )


def _flavor_combine(fij: np.ndarray, fji: np.ndarray, flavor: str) -> np.ndarray:
    if flavor == "tensor":
        return fij
    if flavor == "symm":
        return 0.5 * (fij + fji)
    if flavor == "anti":
        return 0.5 * (fij - fji)
    raise ValueError(f"unknown flavor {flavor!r}")


def bony_decompose(f, g, flavor: str = "plain", lp: LPConfig | None = None) -> BonyTriple:
    """Split a product into paraproducts and resonant part.

    flavor 'plain' multiplies scalars; 'tensor', 'symm', 'anti' form the
    corresponding tensor products of vector fields.  The three pieces sum to
    the (flavored, dealiased) product exactly on the grid.
    """
    if flavor == "plain":
        if not isinstance(f, SpectralField):
            raise TypeError("flavor 'plain' expects scalar fields")
        if f.grid != g.grid:
            raise ValueError("grid mismatch")
        return _scalar_bony(f, g, lp or LPConfig(f.grid))

    if not isinstance(f, VectorField):
        raise TypeError(f"flavor {flavor!r} expects vector fields")
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    grid = f.grid
    lp = lp or LPConfig(grid)
    fb = [BlockDecomposition(c, lp) for c in f.components]
    gb = [BlockDecomposition(c, lp) for c in g.components]

    pieces = {}
    for kind in ("lt", "gt", "res"):
        raw = [[_pairwise_phys(fb[i], gb[j], kind) for j in range(2)] for i in range(2)]
        entries = [
            [
                from_padded_physical(grid, _flavor_combine(raw[i][j], raw[j][i], flavor))
                for j in range(2)
            ]
            for i in range(2)
        ]
        pieces[kind] = TensorField2(entries)
    return BonyTriple(pieces["lt"], pieces["gt"], pieces["res"])


def resonant_product(f: SpectralField, g: SpectralField, lp: LPConfig | None = None) -> SpectralField:
    """Resonant part of the scalar product (diagonal block pairings only)."""
    lp = lp or LPConfig(f.grid)
    fb = BlockDecomposition(f, lp)
    gb = BlockDecomposition(g, lp)
    return from_padded_physical(f.grid, _pairwise_phys(fb, gb, "res"))
