"""Renormalized products of the rough noise fields.

The velocity/magnetic noise pair is packaged into a 4x4 block gradient
matrix (symmetric gradient of the velocity noise paired with the
antisymmetric gradient of the magnetic noise).  Its resonant product with
its own resolvent smoothing diverges logarithmically in the cutoff; the
divergence sits entirely in the diagonal, where it equals a closed-form
lattice sum that is subtracted.

Matrix products are taken in the 4x4 matrix-multiplication sense with each
scalar multiply replaced by the resonant (diagonal Littlewood-Paley)
product; the diagonal of the unscaled matrix has expectation exactly
renorm_constant(lam, t, nu).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, SpectralField, TensorField4, VectorField
from .littlewood_paley import (
    BlockDecomposition,
    LPConfig,
    _pairwise_phys,
    low_profile,
)
from .noise import NoiseState, noise_fields, sample_noise_at_time
from .spectral import from_padded_physical, grad_decompose

__all__ = [
    "grad_block_matrix",
    "renorm_constant",
    "resolvent",
    "EnhancedNoise",
    "enhanced_noise",
    "ChaosReport",
    "chaos_diagnostics",
    "block_variance_study",
]


def grad_block_matrix(x_u: VectorField, x_b: VectorField) -> TensorField4:
    """4x4 block matrix [[sym grad x_u, anti grad x_b], [-anti grad x_b, -sym grad x_u]]."""
    sym_u, _ = grad_decompose(x_u)
    _, anti_b = grad_decompose(x_b)
    return TensorField4.from_blocks(sym_u, anti_b, -anti_b, -sym_u)


def renorm_constant(lam: float, t: float, nu: float) -> float:
    """Closed-form diagonal counterterm: a finite lattice sum over |k| < lam.

    r(lam, t) = sum_{k != 0} (1/4) l(|k|/lam)^2 (1 - e^{-2 nu |k|^2 t}) / nu
                * (nu |k|^2 / 2 + 1)^{-1},
    which vanishes at t = 0 and at lam = 1 and grows like log(lam).
    """
    if lam < 1:
        raise ValueError(f"threshold must be >= 1, got {lam}")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if nu <= 0:
        raise ValueError(f"diffusivity must be positive, got {nu}")
    kmax = int(np.ceil(lam))
    ax = np.arange(-kmax, kmax + 1)
    k1, k2 = np.meshgrid(ax, ax, indexing="ij")
    ksq = (k1 ** 2 + k2 ** 2).astype(np.float64)
    nonzero = ksq > 0
    weight = low_profile(np.sqrt(ksq) / lam) ** 2
    terms = 0.25 * weight * (-np.expm1(-2.0 * nu * ksq * t)) / nu / (nu * ksq / 2.0 + 1.0)
    return float(np.sum(terms[nonzero]))


def resolvent(f: SpectralField, nu: float) -> SpectralField:
    """Apply (-nu Lap / 2 + 1)^{-1}: per-mode multiplier (nu |k|^2 / 2 + 1)^{-1}."""
    return f.multiplier(1.0 / (nu * f.grid.k_sq / 2.0 + 1.0))


# base-name and sign layout of the 4x4 block gradient matrix:
# entries are +-1 times one of the four distinct scalar fields
#   A11, A12, A22 (symmetric gradient of the velocity noise)
#   B12 (off-diagonal of the antisymmetric gradient of the magnetic noise)
_LAYOUT: list[list[tuple[int, str | None]]] = [
    [(1, "A11"), (1, "A12"), (0, None), (1, "B12")],
    [(1, "A12"), (1, "A22"), (-1, "B12"), (0, None)],
    [(0, None), (-1, "B12"), (-1, "A11"), (-1, "A12")],
    [(1, "B12"), (0, None), (-1, "A12"), (-1, "A22")],
]


def _scalar_bases(x_u: VectorField, x_b: VectorField) -> dict[str, SpectralField]:
    sym_u, _ = grad_decompose(x_u)
    _, anti_b = grad_decompose(x_b)
    return {
        "A11": sym_u.entries[0][0],
        "A12": sym_u.entries[0][1],
        "A22": sym_u.entries[1][1],
        "B12": anti_b.entries[0][1],
    }


class _ResonantTable:
    """All pairwise resonant products between the matrix bases and their resolvents.

    Products are held as padded physical arrays; entries of the matrix
    resonant product are signed sums of at most four of them.
    """

    def __init__(self, bases: dict[str, SpectralField], nu: float, lp: LPConfig):
        self.lp = lp
        self.grid = next(iter(bases.values())).grid
        self.left = {k: BlockDecomposition(v, lp) for k, v in bases.items()}
        self.right = {k: BlockDecomposition(resolvent(v, nu), lp) for k, v in bases.items()}
        self._cache: dict[tuple[str, str], np.ndarray] = {}

    def pair(self, a: str, b: str) -> np.ndarray:
        key = (a, b)
        if key not in self._cache:
            self._cache[key] = _pairwise_phys(self.left[a], self.right[b], "res")
        return self._cache[key]

    def entry_physical(self, i: int, j: int) -> np.ndarray:
        m = self.left[next(iter(self.left))].m
        acc = np.zeros((m, m))
        for k in range(4):
            sg, a = _LAYOUT[i][k]
            sh, b = _LAYOUT[k][j]
            if sg == 0 or sh == 0:
                continue
            acc += (sg * sh) * self.pair(a, b)
        return acc

    def entry_field(self, i: int, j: int) -> SpectralField:
        return from_padded_physical(self.grid, self.entry_physical(i, j))

    def entry_mean(self, i: int, j: int) -> float:
        total = 0.0
        for k in range(4):
            sg, a = _LAYOUT[i][k]
            sh, b = _LAYOUT[k][j]
            if sg == 0 or sh == 0:
                continue
            total += (sg * sh) * float(np.mean(self.pair(a, b)))
        return total


@dataclass
class EnhancedNoise:
    """Mollified block gradient matrix and its renormalized resonant product."""

    grad_matrix: TensorField4
    resonant: TensorField4
    lam: float
    t: float
    r_value: float


def enhanced_noise(state: NoiseState, lam: float) -> EnhancedNoise:
    """Assemble the enhanced noise at the state's time and threshold lam."""
    if lam < 1:
        raise ValueError(f"threshold must be >= 1, got {lam}")
    x_u, x_b = noise_fields(state, lam)
    gm = grad_block_matrix(x_u, x_b)
    bases = _scalar_bases(x_u, x_b)
    lp = LPConfig(state.grid)
    table = _ResonantTable(bases, state.nu, lp)
    r = renorm_constant(lam, state.t, state.nu)
    entries = []
    for i in range(4):
        row = []
        for j in range(4):
            e = table.entry_field(i, j)
            if i == j:
                c = e.coeffs.copy()
                c[0, 0] -= r
                e = SpectralField(state.grid, c, mask=False)
            row.append(e)
        entries.append(row)
    return EnhancedNoise(gm, TensorField4(entries), float(lam), state.t, r)


# ---------------------------------------------------------------------------
# Monte Carlo diagnostics of the zeroth-chaos structure


@dataclass
class ChaosReport:
    samples: int
    lam: float
    t: float
    nu: float
    grid_n: int
    r_value: float
    means: np.ndarray      # (4, 4) ensemble averages of spatial entry means
    stderrs: np.ndarray    # (4, 4) standard errors of those averages
    z_scores: np.ndarray   # (4, 4) deviation from the expected zeroth chaos

    def expected(self) -> np.ndarray:
        return np.eye(4) * self.r_value

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "lam": self.lam,
            "t": self.t,
            "nu": self.nu,
            "grid_n": self.grid_n,
            "r_value": self.r_value,
            "entries": [
                {
                    "row": i,
                    "col": j,
                    "mean": self.means[i, j],
                    "stderr": self.stderrs[i, j],
                    "expected": (self.r_value if i == j else 0.0),
                    "z_score": self.z_scores[i, j],
                }
                for i in range(4)
                for j in range(4)
            ],
        }


def _sample_entry_means(
    grid: GridSpec, nu: float, t: float, lam: float, seed: int, index: int, lp: LPConfig
) -> np.ndarray:
    state = sample_noise_at_time(grid, nu, t, seed, sample_index=index)
    x_u, x_b = noise_fields(state, lam)
    table = _ResonantTable(_scalar_bases(x_u, x_b), nu, lp)
    out = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            out[i, j] = table.entry_mean(i, j)
    return out


def chaos_diagnostics(
    samples: int,
    lam: float,
    t: float,
    nu: float,
    grid: GridSpec,
    seed: int = 0,
    threads: int = 1,
) -> ChaosReport:
    """Ensemble statistics of the matrix resonant product against its counterterm.

    Spatial averaging over the torus is applied per sample (the noise is
    stationary in x), then sample averaging; the report carries one mean,
    standard error, and z-score per entry.  Draws are indexed by sample, so
    the result is independent of the thread count.
    """
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    lp = LPConfig(grid)
    acc = np.zeros((samples, 4, 4))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for s, res in enumerate(
                pool.map(lambda i: _sample_entry_means(grid, nu, t, lam, seed, i, lp),
                         range(samples))
            ):
                acc[s] = res
    else:
        for s in range(samples):
            acc[s] = _sample_entry_means(grid, nu, t, lam, seed, s, lp)
    means = acc.mean(axis=0)
    stderrs = acc.std(axis=0, ddof=1) / np.sqrt(samples)
    r = renorm_constant(lam, t, nu)
    expected = np.eye(4) * r
    safe = np.where(stderrs == 0, 1.0, stderrs)
    z = (means - expected) / safe
    return ChaosReport(samples, float(lam), float(t), float(nu), grid.n, r, means, stderrs, z)


def block_variance_study(
    samples: int,
    lams: list[float],
    t: float,
    nu: float,
    grid: GridSpec,
    seed: int = 0,
    block_index: int = 3,
) -> dict:
    """Per-block second moments of the renormalized bottom-right entry.

    For each sample the same noise draw is pushed through every threshold in
    lams (common randomness), giving (a) the ensemble mean of
    ||Delta_m (entry - r)||_{L^2}^2 per lam and (b) the same quantity for
    consecutive-threshold differences (a Cauchy-sequence diagnostic).
    """
    lp = LPConfig(grid)
    sym = lp.block_symbol(block_index)
    var_acc = np.zeros(len(lams))
    diff_acc = np.zeros(max(len(lams) - 1, 0))
    for s in range(samples):
        state = sample_noise_at_time(grid, nu, t, seed, sample_index=s)
        renormalized = []
        for lam in lams:
            x_u, x_b = noise_fields(state, lam)
            table = _ResonantTable(_scalar_bases(x_u, x_b), nu, lp)
            entry = table.entry_field(3, 3)
            c = entry.coeffs.copy()
            c[0, 0] -= renorm_constant(lam, t, nu)
            renormalized.append(c)
        for li, c in enumerate(renormalized):
            var_acc[li] += float(np.sum(np.abs(sym * c) ** 2))
        for li in range(len(lams) - 1):
            d = renormalized[li] - renormalized[li + 1]
            diff_acc[li] += float(np.sum(np.abs(sym * d) ** 2))
    return {
        "samples": samples,
        "lams": list(map(float, lams)),
        "block_index": block_index,
        "block_second_moment": (var_acc / samples).tolist(),
        "cauchy_differences": (diff_acc / samples).tolist(),
    }
