"""Divergence-free noise in Fourier space: per-mode Ornstein-Uhlenbeck dynamics.

Each forcing channel (velocity / magnetic) carries one complex OU coefficient
per nonzero mode m, attached to the divergence-free basis vector
e_m(x) = e^{i 2 pi m.x} m-perp / |m|.  Realness of the physical fields is
equivalent to F(-m) = -conj(F(m)), which is enforced by construction:
independent draws live on a half lattice and are mirrored.

Draws are counter-based (Philox keyed by (seed, channel), counter indexed by
step), so trajectories are bitwise reproducible regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .grid import GridSpec, SpectralField, VectorField
from .littlewood_paley import low_profile
from .spectral import leray_project, random_divfree_field

__all__ = [
    "NoiseState",
    "initial_noise_state",
    "ou_step",
    "sample_noise_at_time",
    "ou_variance",
    "noise_fields",
    "noise_field_single",
    "q_step",
    "q_update",
    "perturbation_fields",
]

_CHANNELS = {"u": 0, "b": 1}
_KIND_STEP = 0
_KIND_ONESHOT = 1


@lru_cache(maxsize=16)
def _lattice(n: int, cutoff: float):
    """Half-lattice index arrays and the mirror map for an n-point grid."""
    grid = GridSpec(n)
    k1, k2, kabs = grid.k1, grid.k2, grid.k_abs
    inball = (kabs > 0) & (kabs <= cutoff) & grid.mode_mask
    half = inball & ((k1 > 0) | ((k1 == 0) & (k2 > 0)))
    hi, hj = np.nonzero(half)
    order = np.lexsort((k2[hi, hj], k1[hi, hj]))
    hi, hj = hi[order], hj[order]
    mi, mj = (-hi) % n, (-hj) % n
    return hi, hj, mi, mj


def ou_variance(nu: float, ksq: np.ndarray, t: float) -> np.ndarray:
    """E|F(t,m)|^2 for the OU coefficient started from zero: (1-e^{-2 nu |m|^2 t})/(2 nu |m|^2)."""
    ksq = np.asarray(ksq, dtype=np.float64)
    safe = np.where(ksq == 0, 1.0, ksq)
    return np.where(ksq == 0, 0.0, -np.expm1(-2.0 * nu * safe * t) / (2.0 * nu * safe))


@dataclass(frozen=True)
class NoiseState:
    """Per-mode OU coefficients for both channels plus the draw bookkeeping."""

    grid: GridSpec
    nu: float
    seed: int
    t: float
    step: int
    F_u: np.ndarray
    F_b: np.ndarray
    mode_cutoff: float

    def coefficients(self, channel: str) -> np.ndarray:
        return self.F_u if channel == "u" else self.F_b


def initial_noise_state(
    grid: GridSpec, nu: float, seed: int, mode_cutoff: float | None = None
) -> NoiseState:
    if nu <= 0:
        raise ValueError(f"diffusivity must be positive, got {nu}")
    cutoff = float(grid.n // 2 - 1) if mode_cutoff is None else float(mode_cutoff)
    z = np.zeros((grid.n, grid.n), dtype=np.complex128)
    return NoiseState(grid, nu, int(seed), 0.0, 0, z, z.copy(), cutoff)


def _draw_half(seed: int, channel: int, index: int, kind: int, count: int) -> np.ndarray:
    """Standard complex Gaussians (unit E|z|^2) for one (step/sample, kind) block.

    The index lives in the second counter word: the first word is consumed by
    the generator itself, so distinct indices own disjoint counter planes and
    the draws are genuinely independent across steps and samples.
    """
    bitgen = np.random.Philox(key=np.array([seed, channel], dtype=np.uint64),
                              counter=np.array([0, index, kind, 0], dtype=np.uint64))
    gauss = np.random.Generator(bitgen).standard_normal(2 * count)
    return (gauss[:count] + 1j * gauss[count:]) / np.sqrt(2.0)


def _mirror(grid: GridSpec, cutoff: float, half_values: np.ndarray) -> np.ndarray:
    hi, hj, mi, mj = _lattice(grid.n, cutoff)
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    out[hi, hj] = half_values
    out[mi, mj] = -np.conj(half_values)
    return out


def ou_step(state: NoiseState, h: float) -> NoiseState:
    """Exact OU transition over one step: decay plus an independent increment.

    F(t+h, m) = e^{-nu |m|^2 h} F(t, m) + eta(m),
    E|eta(m)|^2 = (1 - e^{-2 nu |m|^2 h}) / (2 nu |m|^2).
    """
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    grid = state.grid
    hi, hj, _, _ = _lattice(grid.n, state.mode_cutoff)
    ksq_half = grid.k_sq[hi, hj]
    decay = np.exp(-state.nu * ksq_half * h)
    std = np.sqrt(ou_variance(state.nu, ksq_half, h))
    new = {}
    for name, idx in _CHANNELS.items():
        old_half = state.coefficients(name)[hi, hj]
        eta = std * _draw_half(state.seed, idx, state.step, _KIND_STEP, hi.size)
        new[name] = _mirror(grid, state.mode_cutoff, decay * old_half + eta)
    return replace(state, t=state.t + h, step=state.step + 1, F_u=new["u"], F_b=new["b"])


def sample_noise_at_time(
    grid: GridSpec,
    nu: float,
    t: float,
    seed: int,
    sample_index: int = 0,
    mode_cutoff: float | None = None,
) -> NoiseState:
    """One-shot draw of the zero-start OU coefficients at time t (exact law)."""
    cutoff = float(grid.n // 2 - 1) if mode_cutoff is None else float(mode_cutoff)
    hi, hj, _, _ = _lattice(grid.n, cutoff)
    std = np.sqrt(ou_variance(nu, grid.k_sq[hi, hj], t))
    fields = {}
    for name, idx in _CHANNELS.items():
        z = _draw_half(seed, idx, sample_index, _KIND_ONESHOT, hi.size)
        fields[name] = _mirror(grid, cutoff, std * z)
    return NoiseState(grid, nu, int(seed), float(t), 0, fields["u"], fields["b"], cutoff)


def noise_field_single(
    state: NoiseState, channel: str, lam: float | None = None
) -> VectorField:
    """Assemble X = sum_m F(m) e_m, optionally mollified by the low cutoff at lam."""
    grid = state.grid
    F = state.coefficients(channel)
    if lam is not None:
        F = F * low_profile(grid.k_abs / lam)
    kabs = np.where(grid.k_abs == 0, 1.0, grid.k_abs)
    # m-perp = (m2, -m1)
    c1 = F * grid.k2 / kabs
    c2 = -F * grid.k1 / kabs
    return VectorField(
        SpectralField(grid, c1, mask=False), SpectralField(grid, c2, mask=False)
    )


def noise_fields(state: NoiseState, lam: float | None = None) -> tuple[VectorField, VectorField]:
    return noise_field_single(state, "u", lam), noise_field_single(state, "b", lam)


def _phi_weights(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi1 = (e^z - 1)/z and phi2 = (e^z - 1 - z)/z^2, stable near z = 0."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1.0 + z / 2.0, np.expm1(zs) / zs)
    phi2 = np.where(small, 0.5 + z / 6.0, (np.expm1(zs) - zs) / zs ** 2)
    return phi1, phi2


def q_update(q: VectorField, x_old: VectorField, x_new: VectorField, nu: float, h: float) -> VectorField:
    """Advance (d_t - nu Lap) q = 2 x with the exact heat kernel and a trapezoidal source.

    The source is interpolated linearly over the step and integrated against
    the exponential kernel, which is exact for the homogeneous part and
    second order in h for the forcing.
    """
    grid = q.grid
    z = -nu * grid.k_sq * h
    phi1, phi2 = _phi_weights(z)
    w_old = h * (phi1 - phi2)
    w_new = h * phi2
    decay = np.exp(z)
    comps = []
    for qc, xo, xn in zip(q.components, x_old.components, x_new.components):
        c = decay * qc.coeffs + 2.0 * (w_old * xo.coeffs + w_new * xn.coeffs)
        comps.append(SpectralField(grid, c, mask=False))
    return VectorField(comps[0], comps[1])


def q_step(
    q_u: VectorField, q_b: VectorField, state: NoiseState, h: float
) -> tuple[VectorField, VectorField, NoiseState]:
    """Advance both driver integrals and the noise state itself by one step."""
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    x_u0, x_b0 = noise_fields(state)
    new_state = ou_step(state, h)
    x_u1, x_b1 = noise_fields(new_state)
    return (
        q_update(q_u, x_u0, x_u1, state.nu, h),
        q_update(q_b, x_b0, x_b1, state.nu, h),
        new_state,
    )


def perturbation_fields(spec: dict | None, grid: GridSpec) -> tuple[VectorField, VectorField]:
    """Deterministic divergence-free forcing perturbations from a config mapping.

    Recognized kinds: 'zero' (default), 'single-mode' {mode: [m1, m2],
    amplitude}, 'random' {seed, l2_norm, kmax}.  Raw fields supplied as
    records must already be divergence-free.
    """
    if spec is None:
        spec = {"kind": "zero"}
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return VectorField.zeros(grid), VectorField.zeros(grid)
    if kind == "single-mode":
        m1, m2 = (int(v) for v in spec.get("mode", (1, 0)))
        amp = float(spec.get("amplitude", 1.0))
        half = grid.n // 2 - 1
        if not (abs(m1) <= half and abs(m2) <= half) or (m1, m2) == (0, 0):
            raise ValueError(f"perturbation mode {(m1, m2)} not representable")
        out = []
        for _ in range(2):
            c1 = np.zeros((grid.n, grid.n), dtype=np.complex128)
            c2 = np.zeros((grid.n, grid.n), dtype=np.complex128)
            c1[m1 % grid.n, m2 % grid.n] = amp
            c1[(-m1) % grid.n, (-m2) % grid.n] = amp
            v = leray_project(
                VectorField(
                    SpectralField(grid, c1, mask=False), SpectralField(grid, c2, mask=False)
                )
            )
            out.append(v)
        return out[0], out[1]
    if kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        zu = random_divfree_field(grid, rng, l2_norm=float(spec.get("l2_norm", 0.1)))
        zb = random_divfree_field(grid, rng, l2_norm=float(spec.get("l2_norm", 0.1)))
        return zu, zb
    raise ValueError(f"unknown perturbation kind {kind!r}")
