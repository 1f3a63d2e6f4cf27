"""Fourier grid and field containers on the unit torus.

All fields live on the square torus [0,1)^2 and are represented by complex
Fourier coefficients c(k) of e^{i 2 pi k.x} in numpy FFT ordering.  The
derivative symbol is d_j <-> i k_j, so the Laplacian symbol is -|k|^2 (no
2 pi factors; this amounts to a fixed rescaling of lengths that is applied
consistently everywhere, including diffusivities).

Fields are kept on the symmetric mode set max(|k1|,|k2|) <= n/2 - 1: the
unpaired Nyquist row/column is always zero, so every retained mode has its
conjugate partner on the grid and real fields are exactly Hermitian.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft

__all__ = [
    "GridSpec",
    "SpectralField",
    "VectorField",
    "TensorField2",
    "TensorField4",
]


@dataclass(frozen=True)
class GridSpec:
    """Square spectral grid: n modes per dimension, k in {-n/2, ..., n/2-1}^2.

    padding_factor >= 3/2 guarantees alias-free quadratic products; cubic
    integrals use a separate 2x quadrature grid (see spectral.triple_product_mean).
    """

    n: int
    padding_factor: float = 1.5

    def __post_init__(self) -> None:
        if self.n < 4 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 4, got {self.n}")
        if self.padding_factor < 1.5:
            raise ValueError(
                f"padding_factor must be >= 1.5 for alias-free products, got {self.padding_factor}"
            )

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1D integer wavenumbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def k1(self) -> np.ndarray:
        return self.wavenumbers[:, None] * np.ones(self.n, dtype=np.int64)[None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        return np.ones(self.n, dtype=np.int64)[:, None] * self.wavenumbers[None, :]

    @cached_property
    def k_sq(self) -> np.ndarray:
        return (self.k1 ** 2 + self.k2 ** 2).astype(np.float64)

    @cached_property
    def k_abs(self) -> np.ndarray:
        return np.sqrt(self.k_sq)

    @cached_property
    def mode_mask(self) -> np.ndarray:
        """True on the symmetric mode set max(|k1|,|k2|) <= n/2 - 1."""
        half = self.n // 2 - 1
        return (np.abs(self.k1) <= half) & (np.abs(self.k2) <= half)

    @cached_property
    def padded_n(self) -> int:
        m = int(np.ceil(self.padding_factor * self.n))
        return m + (m % 2)

    @cached_property
    def max_radius(self) -> float:
        """Largest Euclidean |k| on the retained mode set."""
        half = self.n // 2 - 1
        return float(np.sqrt(2.0) * half)

    def pad_indices(self, m: int) -> np.ndarray:
        """FFT indices of this grid's modes inside an m-point FFT array."""
        return np.asarray(self.wavenumbers % m, dtype=np.intp)

    @cached_property
    def _conj_index(self) -> tuple[np.ndarray, np.ndarray]:
        idx = (-np.arange(self.n)) % self.n
        return idx[:, None] * np.ones(self.n, dtype=np.intp)[None, :], np.ones(
            self.n, dtype=np.intp
        )[:, None] * idx[None, :]

    def reflect(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficient array of k -> c(-k)."""
        i1, i2 = self._conj_index
        return coeffs[i1, i2]


def _as_grid_coeffs(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.shape != (grid.n, grid.n):
        raise ValueError(f"coefficient shape {c.shape} does not match grid n={grid.n}")
    return c


class SpectralField:
    """Real scalar field on the torus stored as complex Fourier coefficients."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: GridSpec, coeffs: np.ndarray, *, mask: bool = True):
        self.grid = grid
        c = _as_grid_coeffs(grid, coeffs)
        if mask:
            c = np.where(grid.mode_mask, c, 0.0)
        self.coeffs = c

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128), mask=False)

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "SpectralField":
        vals = np.asarray(values, dtype=np.float64)
        if vals.shape != (grid.n, grid.n):
            raise ValueError(f"physical shape {vals.shape} does not match grid n={grid.n}")
        return cls(grid, _fft.fft2(vals) / grid.n ** 2)

    def values(self) -> np.ndarray:
        """Physical samples on the n x n collocation grid."""
        return _fft.ifft2(self.coeffs).real * self.grid.n ** 2

    def imag_defect(self) -> float:
        """Max |imaginary part| of the inverse transform (Hermitian-symmetry check)."""
        phys = _fft.ifft2(self.coeffs) * self.grid.n ** 2
        return float(np.max(np.abs(phys.imag)))

    # -- algebra ---------------------------------------------------------
    def _check(self, other: "SpectralField") -> None:
        if self.grid is not other.grid and self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, mask=False)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, mask=False)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, mask=False)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * a, mask=False)

    __rmul__ = __mul__

    def multiplier(self, symbol: np.ndarray) -> "SpectralField":
        """Apply a Fourier multiplier sampled on the mode grid."""
        return SpectralField(self.grid, self.coeffs * symbol, mask=False)

    def deriv(self, axis: int) -> "SpectralField":
        k = self.grid.k1 if axis == 1 else self.grid.k2
        return SpectralField(self.grid, 1j * k * self.coeffs, mask=False)

    def laplacian(self) -> "SpectralField":
        return SpectralField(self.grid, -self.grid.k_sq * self.coeffs, mask=False)

    # -- scalars ---------------------------------------------------------
    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def project_mean_zero(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[0, 0] = 0.0
        return SpectralField(self.grid, c, mask=False)

    @property
    def mean_zero(self) -> bool:
        return abs(self.coeffs[0, 0]) == 0.0

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), mask=False)


class VectorField:
    """R^2-valued field; components are SpectralFields on a common grid."""

    __slots__ = ("c1", "c2")

    def __init__(self, c1: SpectralField, c2: SpectralField):
        if c1.grid != c2.grid:
            raise ValueError("grid mismatch between components")
        self.c1 = c1
        self.c2 = c2

    @property
    def grid(self) -> GridSpec:
        return self.c1.grid

    @property
    def components(self) -> tuple[SpectralField, SpectralField]:
        return (self.c1, self.c2)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.c1 - other.c1, self.c2 - other.c2)

    def __neg__(self) -> "VectorField":
        return VectorField(-self.c1, -self.c2)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.c1 * a, self.c2 * a)

    __rmul__ = __mul__

    def divergence(self) -> SpectralField:
        return self.c1.deriv(1) + self.c2.deriv(2)

    def divergence_defect(self) -> float:
        """Divergence size relative to the field size (0 for exactly solenoidal)."""
        d = self.divergence().l2()
        scale = self.l2() * max(1.0, self.grid.max_radius)
        return d / scale if scale > 0 else d

    @property
    def divergence_free(self) -> bool:
        return self.divergence_defect() < 1e-12

    def l2(self) -> float:
        return float(np.sqrt(self.c1.l2() ** 2 + self.c2.l2() ** 2))

    def project_mean_zero(self) -> "VectorField":
        return VectorField(self.c1.project_mean_zero(), self.c2.project_mean_zero())

    def copy(self) -> "VectorField":
        return VectorField(self.c1.copy(), self.c2.copy())


class TensorField2:
    """2x2 matrix of SpectralFields."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("TensorField2 requires a 2x2 entry table")
        g = rows[0][0].grid
        if any(e.grid != g for r in rows for e in r):
            raise ValueError("grid mismatch among tensor entries")
        self.entries = rows

    @property
    def grid(self) -> GridSpec:
        return self.entries[0][0].grid

    def __getitem__(self, ij) -> SpectralField:
        i, j = ij
        return self.entries[i][j]

    @classmethod
    def zeros(cls, grid: GridSpec) -> "TensorField2":
        return cls([[SpectralField.zeros(grid) for _ in range(2)] for _ in range(2)])

    def __add__(self, other: "TensorField2") -> "TensorField2":
        return TensorField2(
            [[self.entries[i][j] + other.entries[i][j] for j in range(2)] for i in range(2)]
        )

    def __sub__(self, other: "TensorField2") -> "TensorField2":
        return TensorField2(
            [[self.entries[i][j] - other.entries[i][j] for j in range(2)] for i in range(2)]
        )

    def __neg__(self) -> "TensorField2":
        return TensorField2([[-self.entries[i][j] for j in range(2)] for i in range(2)])

    def __mul__(self, a: float) -> "TensorField2":
        return TensorField2([[self.entries[i][j] * a for j in range(2)] for i in range(2)])

    __rmul__ = __mul__

    def transpose(self) -> "TensorField2":
        return TensorField2([[self.entries[j][i] for j in range(2)] for i in range(2)])

    def trace(self) -> SpectralField:
        return self.entries[0][0] + self.entries[1][1]

    def divergence(self) -> VectorField:
        """Row-wise divergence: [div T]_i = sum_j d_j T_{ij}."""
        r1 = self.entries[0][0].deriv(1) + self.entries[0][1].deriv(2)
        r2 = self.entries[1][0].deriv(1) + self.entries[1][1].deriv(2)
        return VectorField(r1, r2)

    def symmetry_defect(self) -> float:
        d = self.entries[0][1] - self.entries[1][0]
        return d.l2()

    def antisymmetry_defect(self) -> float:
        s = (
            (self.entries[0][1] + self.entries[1][0]).l2()
            + self.entries[0][0].l2()
            + self.entries[1][1].l2()
        )
        return s

    def l2(self) -> float:
        return float(
            np.sqrt(sum(self.entries[i][j].l2() ** 2 for i in range(2) for j in range(2)))
        )


class TensorField4:
    """4x4 matrix of SpectralFields, addressed as 2x2 blocks of TensorField2."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("TensorField4 requires a 4x4 entry table")
        self.entries = rows

    @classmethod
    def from_blocks(cls, b11: TensorField2, b12: TensorField2, b21: TensorField2, b22: TensorField2) -> "TensorField4":
        blocks = [[b11, b12], [b21, b22]]
        rows = []
        for bi in range(2):
            for i in range(2):
                rows.append(
                    [blocks[bi][bj].entries[i][j] for bj in range(2) for j in range(2)]
                )
        return cls(rows)

    @property
    def grid(self) -> GridSpec:
        return self.entries[0][0].grid

    def __getitem__(self, ij) -> SpectralField:
        i, j = ij
        return self.entries[i][j]

    def block(self, bi: int, bj: int) -> TensorField2:
        return TensorField2(
            [[self.entries[2 * bi + i][2 * bj + j] for j in range(2)] for i in range(2)]
        )

    def block_structure_defect(self) -> float:
        """Size of the deviation from block(1,1) = -block(2,2), block(1,2) = -block(2,1)."""
        d = 0.0
        for i in range(2):
            for j in range(2):
                d += (self.block(0, 0).entries[i][j] + self.block(1, 1).entries[i][j]).l2()
                d += (self.block(0, 1).entries[i][j] + self.block(1, 0).entries[i][j]).l2()
        return d

    def l2(self) -> float:
        return float(
            np.sqrt(sum(self.entries[i][j].l2() ** 2 for i in range(4) for j in range(4)))
        )
