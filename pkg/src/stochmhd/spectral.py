"""Differential operators, projections, and alias-free products.

Quadratic products are evaluated on a zero-padded physical grid (3/2 rule),
which makes them exact for band-limited factors.  Integrals of triple
products use a 2x quadrature grid: three factors with per-axis wavenumbers
below n/2 cannot alias onto the zero mode there, so those integrals are
exact too.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as _fft

from .grid import GridSpec, SpectralField, TensorField2, VectorField

__all__ = [
    "to_padded_physical",
    "from_padded_physical",
    "dealiased_product",
    "tensor_product",
    "divergence_tensor",
    "grad",
    "grad_decompose",
    "leray_project",
    "heat_propagate",
    "fractional_laplacian",
    "inner",
    "inner_vector",
    "triple_product_mean",
    "advect",
    "matvec",
    "sobolev_norm",
    "random_scalar_field",
    "random_divfree_field",
    "field_to_records",
    "field_from_records",
]


# ---------------------------------------------------------------------------
# padded transforms


def to_padded_physical(f: SpectralField, m: int | None = None) -> np.ndarray:
    """Physical samples of f on an m x m grid (m defaults to the padded size)."""
    g = f.grid
    m = g.padded_n if m is None else m
    if m == g.n:
        return f.values()
    big = np.zeros((m, m), dtype=np.complex128)
    idx = g.pad_indices(m)
    big[np.ix_(idx, idx)] = f.coeffs
    return _fft.ifft2(big).real * m ** 2


def from_padded_physical(grid: GridSpec, values: np.ndarray) -> SpectralField:
    """Truncate an m x m physical product back to the grid's retained modes."""
    m = values.shape[0]
    if m == grid.n:
        return SpectralField.from_physical(grid, values)
    big = _fft.fft2(np.asarray(values, dtype=np.float64)) / m ** 2
    idx = grid.pad_indices(m)
    return SpectralField(grid, big[np.ix_(idx, idx)])


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    m = f.grid.padded_n
    return from_padded_physical(f.grid, to_padded_physical(f, m) * to_padded_physical(g, m))


# ---------------------------------------------------------------------------
# tensor algebra


def tensor_product(u: VectorField, v: VectorField, flavor: str = "plain") -> TensorField2:
    """(u (x) v)_{ij} = u_i v_j, dealiased; flavors symm/anti take the (anti)symmetric part."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    m = u.grid.padded_n
    up = [to_padded_physical(c, m) for c in u.components]
    vp = [to_padded_physical(c, m) for c in v.components]
    if flavor == "plain":
        phys = [[up[i] * vp[j] for j in range(2)] for i in range(2)]
    elif flavor == "symm":
        phys = [[0.5 * (up[i] * vp[j] + vp[i] * up[j]) for j in range(2)] for i in range(2)]
    elif flavor == "anti":
        phys = [[0.5 * (up[i] * vp[j] - vp[i] * up[j]) for j in range(2)] for i in range(2)]
    else:
        raise ValueError(f"unknown tensor flavor {flavor!r}")
    return TensorField2(
        [[from_padded_physical(u.grid, phys[i][j]) for j in range(2)] for i in range(2)]
    )


def divergence_tensor(t: TensorField2) -> VectorField:
    return t.divergence()


def grad(phi: VectorField) -> TensorField2:
    """(grad phi)_{ij} = d_i phi_j."""
    return TensorField2(
        [[phi.components[j].deriv(i + 1) for j in range(2)] for i in range(2)]
    )


def grad_decompose(phi: VectorField) -> tuple[TensorField2, TensorField2]:
    """Symmetric and antisymmetric parts of the gradient matrix; their sum is grad phi."""
    g = grad(phi)
    sym = TensorField2(
        [[0.5 * (g.entries[i][j] + g.entries[j][i]) for j in range(2)] for i in range(2)]
    )
    anti = TensorField2(
        [[0.5 * (g.entries[i][j] - g.entries[j][i]) for j in range(2)] for i in range(2)]
    )
    return sym, anti


def advect(a: VectorField, f: VectorField) -> VectorField:
    """(a . grad) f, dealiased."""
    m = a.grid.padded_n
    a1 = to_padded_physical(a.c1, m)
    a2 = to_padded_physical(a.c2, m)
    out = []
    for comp in f.components:
        d1 = to_padded_physical(comp.deriv(1), m)
        d2 = to_padded_physical(comp.deriv(2), m)
        out.append(from_padded_physical(a.grid, a1 * d1 + a2 * d2))
    return VectorField(out[0], out[1])


def matvec(t: TensorField2, v: VectorField) -> VectorField:
    """Pointwise matrix-vector product (T v)_i = T_{ij} v_j, dealiased."""
    m = t.grid.padded_n
    vp = [to_padded_physical(c, m) for c in v.components]
    rows = []
    for i in range(2):
        acc = sum(to_padded_physical(t.entries[i][j], m) * vp[j] for j in range(2))
        rows.append(from_padded_physical(t.grid, acc))
    return VectorField(rows[0], rows[1])


# ---------------------------------------------------------------------------
# projections and multipliers


def leray_project(f: VectorField) -> VectorField:
    """Project onto divergence-free mean-zero fields: c(k) -> (c(k).kp/|k|^2) kp."""
    g = f.grid
    k1, k2 = g.k1, g.k2
    ksq = np.where(g.k_sq == 0, 1.0, g.k_sq)
    # k-perp = (k2, -k1)
    dot = (f.c1.coeffs * k2 - f.c2.coeffs * k1) / ksq
    out1 = dot * k2
    out2 = -dot * k1
    out1[0, 0] = 0.0
    out2[0, 0] = 0.0
    return VectorField(SpectralField(g, out1, mask=False), SpectralField(g, out2, mask=False))


def heat_propagate(f: SpectralField, t: float, nu: float) -> SpectralField:
    """Heat flow e^{nu Lap t}: per-mode decay e^{-nu |k|^2 t}."""
    if t < 0:
        raise ValueError(f"heat flow requires t >= 0, got {t}")
    if nu < 0:
        raise ValueError(f"diffusivity must be >= 0, got {nu}")
    return f.multiplier(np.exp(-nu * f.grid.k_sq * t))


def fractional_laplacian(f: SpectralField, alpha: float) -> SpectralField:
    """(-Lap)^alpha with symbol |k|^{2 alpha}; the zero mode is left untouched."""
    if alpha < 0 and not f.mean_zero:
        raise ValueError("negative fractional power requires a mean-zero field")
    ksq = f.grid.k_sq
    with np.errstate(divide="ignore"):
        sym = np.where(ksq == 0, 1.0, ksq) ** alpha
    sym[0, 0] = 1.0
    return f.multiplier(sym)


# ---------------------------------------------------------------------------
# integrals


def inner(f: SpectralField, g: SpectralField) -> float:
    """Exact L^2(T^2) inner product via the Parseval sum over modes."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return float(np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def inner_vector(f: VectorField, g: VectorField) -> float:
    return inner(f.c1, g.c1) + inner(f.c2, g.c2)


def triple_product_mean(*fields: SpectralField) -> float:
    """Integral over the torus of a pointwise product of scalar fields.

    Evaluated by quadrature on a 2x grid, which is alias-free for up to three
    band-limited factors.
    """
    g = fields[0].grid
    m = 2 * g.n
    prod = to_padded_physical(fields[0], m)
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError("grid mismatch")
        prod = prod * to_padded_physical(f, m)
    return float(np.mean(prod))


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = True) -> float:
    """H^s (or homogeneous H^s) norm from |k|^{2s}-weighted Parseval sums."""
    ksq = f.grid.k_sq
    if homogeneous:
        w = np.where(ksq == 0, 1.0, ksq) ** s
        w[0, 0] = 0.0
    else:
        w = (1.0 + ksq) ** s
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def sobolev_norm_vector(f: VectorField, s: float, homogeneous: bool = True) -> float:
    return float(
        np.sqrt(
            sobolev_norm(f.c1, s, homogeneous) ** 2 + sobolev_norm(f.c2, s, homogeneous) ** 2
        )
    )


# ---------------------------------------------------------------------------
# random band-limited fields


def random_scalar_field(
    grid: GridSpec,
    rng: np.random.Generator,
    decay: float = 2.0,
    kmax: float | None = None,
) -> SpectralField:
    """Gaussian coefficients with |k|^{-decay} spectrum, band-limited to kmax (default n/3)."""
    kmax = grid.n / 3.0 if kmax is None else kmax
    n = grid.n
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    c = (re + 1j * im) / np.sqrt(2.0)
    amp = np.where(grid.k_sq == 0, 1.0, grid.k_sq) ** (-decay / 2.0)
    amp[0, 0] = 0.0
    c = c * amp * (grid.k_abs <= kmax)
    # Hermitian-symmetrize so the field is real.
    c = 0.5 * (c + np.conj(grid.reflect(c)))
    c[0, 0] = 0.0
    return SpectralField(grid, c)


def random_divfree_field(
    grid: GridSpec,
    rng: np.random.Generator,
    decay: float = 2.0,
    kmax: float | None = None,
    l2_norm: float | None = None,
) -> VectorField:
    """Random band-limited divergence-free mean-zero vector field."""
    v = VectorField(
        random_scalar_field(grid, rng, decay, kmax),
        random_scalar_field(grid, rng, decay, kmax),
    )
    v = leray_project(v)
    if l2_norm is not None:
        cur = v.l2()
        if cur > 0:
            v = v * (l2_norm / cur)
    return v


# ---------------------------------------------------------------------------
# serialization: flat records of (k1, k2, re, im)

_RECORD_DTYPE = np.dtype([("k1", "<i4"), ("k2", "<i4"), ("re", "<f8"), ("im", "<f8")])


def field_to_records(f: SpectralField) -> np.ndarray:
    """Flatten nonzero modes into little-endian (k1, k2, re, im) records."""
    g = f.grid
    keep = (np.abs(f.coeffs) > 0) & g.mode_mask
    i1, i2 = np.nonzero(keep)
    order = np.lexsort((g.k2[i1, i2], g.k1[i1, i2]))
    i1, i2 = i1[order], i2[order]
    rec = np.zeros(i1.size, dtype=_RECORD_DTYPE)
    rec["k1"] = g.k1[i1, i2]
    rec["k2"] = g.k2[i1, i2]
    rec["re"] = f.coeffs[i1, i2].real
    rec["im"] = f.coeffs[i1, i2].imag
    return rec


def field_from_records(grid: GridSpec, records: np.ndarray) -> SpectralField:
    rec = np.asarray(records, dtype=_RECORD_DTYPE)
    c = np.zeros((grid.n, grid.n), dtype=np.complex128)
    half = grid.n // 2 - 1
    if np.any(np.abs(rec["k1"]) > half) or np.any(np.abs(rec["k2"]) > half):
        raise ValueError("record wavenumber outside the grid's retained modes")
    c[rec["k1"] % grid.n, rec["k2"] % grid.n] = rec["re"] + 1j * rec["im"]
    return SpectralField(grid, c)
