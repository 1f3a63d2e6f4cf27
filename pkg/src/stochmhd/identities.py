"""Machine-precision checks of the exact cancellation identities.

Every identity here is an algebraic consequence of incompressibility and
integration by parts, so on a dealiased grid both sides agree to round-off.
Residuals are reported relative to a norm envelope of the pairing (what the
integral could have been without cancellation), which keeps the ratio
meaningful even when individual terms happen to vanish on their own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, VectorField
from .littlewood_paley import bony_decompose, freq_project_vector
from .spectral import (
    advect,
    fractional_laplacian,
    grad_decompose,
    inner_vector,
    matvec,
    random_divfree_field,
    sobolev_norm_vector,
    tensor_product,
    to_padded_physical,
    triple_product_mean,
)

__all__ = [
    "IdentityRecord",
    "energy_identities",
    "divfree_tensor_identities",
    "transport_pair_identities",
    "paraproduct_algebra_identities",
    "identity_suite",
]


@dataclass
class IdentityRecord:
    identity_id: str
    lhs: float
    rhs: float
    residual: float
    relative_residual: float
    scale: float
    grid_n: int
    seed: int | None = None

    def passed(self, tol: float) -> bool:
        return self.relative_residual < tol


_EPS_FLOOR = np.finfo(np.float64).eps


def _record(identity_id: str, lhs: float, rhs: float, scale: float,
            grid_n: int, seed: int | None) -> IdentityRecord:
    scale = max(scale, _EPS_FLOOR)
    resid = abs(lhs - rhs)
    return IdentityRecord(
        identity_id=identity_id,
        lhs=lhs,
        rhs=rhs,
        residual=resid,
        relative_residual=resid / (scale + abs(lhs) + abs(rhs)),
        scale=scale,
        grid_n=grid_n,
        seed=seed,
    )


def _field_record(identity_id: str, lhs: VectorField, rhs: VectorField,
                  grid_n: int, seed: int | None) -> IdentityRecord:
    ln, rn = lhs.l2(), rhs.l2()
    resid = (lhs - rhs).l2()
    scale = max(ln + rn, _EPS_FLOOR)
    return IdentityRecord(identity_id, ln, rn, resid, resid / (scale + ln + rn),
                          scale, grid_n, seed)


def _require_divfree(name: str, *fields: VectorField) -> None:
    for f in fields:
        if f.divergence_defect() > 1e-10:
            raise ValueError(f"{name} requires divergence-free inputs")


def _advection_triple(a: VectorField, f: VectorField, g: VectorField) -> tuple[float, float]:
    """Integral of (a.grad) f . g as a sum of exact triple products, plus its term mass."""
    total = 0.0
    mass = 0.0
    for i in range(2):
        for j in range(2):
            term = triple_product_mean(a.components[j], f.components[i].deriv(j + 1),
                                       g.components[i])
            total += term
            mass += abs(term)
    return total, mass


def _laplacian_vec(f: VectorField) -> VectorField:
    return VectorField(f.c1.laplacian(), f.c2.laplacian())


# ---------------------------------------------------------------------------
# energy identities


def _envelope(a: VectorField, f: VectorField, g: VectorField) -> float:
    """Cauchy-Schwarz envelope ||(a.grad) f|| ||g|| of an advective pairing."""
    return advect(a, f).l2() * g.l2()


def energy_identities(u: VectorField, b: VectorField, seed: int | None = None) -> list[IdentityRecord]:
    """The four vanishing energy pairings plus the nonzero mixed-dissipation equality."""
    _require_divfree("energy_identities", u, b)
    n = u.grid.n
    out = []

    v, _ = _advection_triple(u, u, u)
    out.append(_record("advect_u_self", v, 0.0, _envelope(u, u, u), n, seed))

    v, _ = _advection_triple(u, b, b)
    out.append(_record("advect_b_self", v, 0.0, _envelope(u, b, b), n, seed))

    v1, _ = _advection_triple(b, b, u)
    v2, _ = _advection_triple(b, u, b)
    out.append(_record("lorentz_pair", v1 + v2, 0.0,
                       _envelope(b, b, u) + _envelope(b, u, b), n, seed))

    lap_u = _laplacian_vec(u)
    v, _ = _advection_triple(u, u, lap_u)
    out.append(_record("vorticity_transport", v, 0.0, _envelope(u, u, lap_u), n, seed))

    # mixed-dissipation obstruction: both sides genuinely nonzero.  Note the
    # vorticity identity kills the pure velocity pairing, so the content is in
    # the three mixed terms; the right-hand side carries a +2 prefactor (the
    # equality with a -2 prefactor fails on generic fields, as independent
    # symbolic and coarse-grid oracles confirm).
    lap_b = _laplacian_vec(b)
    lhs = (
        _advection_triple(u, u, lap_u)[0]
        - _advection_triple(b, b, lap_u)[0]
        + _advection_triple(u, b, lap_b)[0]
        - _advection_triple(b, u, lap_b)[0]
    )

    u1, u2 = u.components
    b1, b2 = b.components
    m = 2 * u.grid.n
    pp = lambda f: to_padded_physical(f, m)  # noqa: E731
    bracket = pp(b1.deriv(1)) * (pp(u2.deriv(1)) + pp(u1.deriv(2))) - pp(u1.deriv(1)) * (
        pp(b2.deriv(1)) + pp(b1.deriv(2))
    )
    integrand = 2.0 * bracket * (pp(b2.deriv(1)) - pp(b1.deriv(2)))
    rhs = float(np.mean(integrand))
    # scale is the L^1 mass of the integrand: |lhs| / scale measures how far
    # the obstruction is from a cancellation, independent of field amplitude
    scale = float(np.mean(np.abs(integrand)))
    out.append(_record("mixed_laplacian_obstruction", lhs, rhs, scale, n, seed))
    return out


# ---------------------------------------------------------------------------
# divergence-free tensor reductions


def divfree_tensor_identities(
    x_u: VectorField,
    x_b: VectorField,
    w_u: VectorField,
    w_b: VectorField,
    lam: float,
    nu: float = 1.0,
    seed: int | None = None,
) -> list[IdentityRecord]:
    """Reductions of the mollified-noise transport terms and their energy pairing."""
    _require_divfree("divfree_tensor_identities", x_u, x_b, w_u, w_b)
    n = x_u.grid.n
    xl_u = freq_project_vector(x_u, lam, "low")
    xl_b = freq_project_vector(x_b, lam, "low")
    out = []

    # divergence of 2 X (x)_s w against transport form (w.grad)X + (X.grad)w
    for tag, xx, ww in (("u", xl_u, w_u), ("b", xl_b, w_b)):
        lhs = (2.0 * tensor_product(xx, ww, "symm")).divergence()
        rhs = advect(ww, xx) + advect(xx, ww)
        out.append(_field_record(f"div_symm_product_{tag}", lhs, rhs, n, seed))

    # mixed plain-product pairs whose divergences reduce jointly
    lhs = (tensor_product(w_b, xl_u) + tensor_product(xl_b, w_u)).divergence()
    rhs = advect(xl_u, w_b) + advect(w_u, xl_b)
    out.append(_field_record("div_cross_pair_bu", lhs, rhs, n, seed))

    lhs = (tensor_product(w_u, xl_b) + tensor_product(xl_u, w_b)).divergence()
    rhs = advect(xl_b, w_u) + advect(w_b, xl_u)
    out.append(_field_record("div_cross_pair_ub", lhs, rhs, n, seed))

    # pairing reductions: the transport-by-solenoidal-field halves drop out
    full_u, _ = _pairing_full(xl_u, w_u, w_u)
    red_u, _ = _advection_triple(w_u, xl_u, w_u)
    env_u = _envelope(w_u, xl_u, w_u) + _envelope(xl_u, w_u, w_u)
    out.append(_record("symm_pairing_reduction_u", full_u, red_u, env_u, n, seed))

    sym_u, _ = grad_decompose(xl_u)
    quad = inner_vector(matvec(sym_u, w_u), w_u)
    out.append(_record("symm_gradient_pairing_u", red_u, quad, env_u, n, seed))

    full_c, _ = _pairing_full(xl_u, w_b, w_b, cross_grad=xl_b, cross_vec=w_u)
    red_c, _ = _advection_triple(w_u, xl_b, w_b)
    env_c = _envelope(w_u, xl_b, w_b) + _envelope(xl_u, w_b, w_b)
    out.append(_record("cross_pairing_reduction", full_c, red_c, env_c, n, seed))

    # the eight cross-advection terms cancel in two groups of four
    env_a = advect(xl_b, w_b).l2() * w_u.l2() + advect(xl_b, w_u).l2() * w_b.l2()
    for comp, tag in ((0, "cross_advection_sum_1"), (1, "cross_advection_sum_2")):
        total = 0.0
        for j in range(2):
            t1 = triple_product_mean(w_b.components[comp].deriv(j + 1),
                                     xl_b.components[j], w_u.components[comp])
            t2 = triple_product_mean(w_u.components[comp].deriv(j + 1),
                                     xl_b.components[j], w_b.components[comp])
            total += -t1 - t2
        out.append(_record(tag, total, 0.0, env_a, n, seed))

    # full pairing against the gradient block matrix
    lhs = (
        inner_vector(
            w_u,
            (2.0 * tensor_product(xl_u, w_u, "symm") - 2.0 * tensor_product(xl_b, w_b, "symm")).divergence(),
        )
        + inner_vector(
            w_b,
            (2.0 * tensor_product(w_b, xl_u, "anti") - 2.0 * tensor_product(w_u, xl_b, "anti")).divergence(),
        )
    )
    sym_u, _ = grad_decompose(xl_u)
    _, anti_b = grad_decompose(xl_b)
    rhs = (
        inner_vector(matvec(sym_u, w_u), w_u)
        + inner_vector(matvec(anti_b, w_b), w_u)
        - inner_vector(matvec(anti_b, w_u), w_b)
        - inner_vector(matvec(sym_u, w_b), w_b)
    )
    mass = (
        abs(inner_vector(matvec(sym_u, w_u), w_u))
        + abs(inner_vector(matvec(anti_b, w_b), w_u))
        + abs(inner_vector(matvec(anti_b, w_u), w_b))
        + abs(inner_vector(matvec(sym_u, w_b), w_b))
    )
    out.append(_record("gradient_matrix_pairing", lhs, rhs, mass, n, seed))

    # dissipative pairing in block-matrix form
    h1 = sobolev_norm_vector(w_u, 1.0) ** 2 + sobolev_norm_vector(w_b, 1.0) ** 2
    direct = (
        2.0 * nu * inner_vector(w_u, _laplacian_vec(w_u))
        + 2.0 * nu * inner_vector(w_b, _laplacian_vec(w_b))
        - 2.0 * lhs
    )
    block = -2.0 * nu * h1 - 2.0 * rhs
    out.append(_record("block_matrix_energy_form", direct, block,
                       2.0 * nu * h1 + 2.0 * mass, n, seed))
    return out


def _pairing_full(xx: VectorField, wa: VectorField, wtest: VectorField,
                  cross_grad: VectorField | None = None,
                  cross_vec: VectorField | None = None) -> tuple[float, float]:
    """Eight-term transport pairing before the solenoidal cancellations."""
    grad_part = cross_grad if cross_grad is not None else xx
    vec_part = cross_vec if cross_vec is not None else wa
    total = 0.0
    mass = 0.0
    for i in range(2):
        for j in range(2):
            t1 = triple_product_mean(vec_part.components[j],
                                     grad_part.components[i].deriv(j + 1),
                                     wtest.components[i])
            t2 = triple_product_mean(xx.components[j],
                                     wa.components[i].deriv(j + 1),
                                     wtest.components[i])
            total += t1 + t2
            mass += abs(t1) + abs(t2)
    return total, mass


# ---------------------------------------------------------------------------
# transport pairs


def transport_pair_identities(
    u: VectorField,
    b: VectorField,
    f: VectorField,
    g: VectorField,
    eps: float = 0.0,
    seed: int | None = None,
) -> list[IdentityRecord]:
    """Pairings of advective terms that vanish by moving the derivative across."""
    if not (0.0 <= eps <= 0.5):
        raise ValueError(f"fractional exponent must lie in [0, 1/2], got {eps}")
    _require_divfree("transport_pair_identities", b, g)
    n = u.grid.n
    out = []

    lhs1 = inner_vector(f, tensor_product(g, g).divergence())
    lhs2 = inner_vector(g, tensor_product(f, g).divergence())
    env = tensor_product(g, g).divergence().l2() * f.l2() + tensor_product(
        f, g
    ).divergence().l2() * g.l2()
    out.append(_record("transport_exchange", lhs1 + lhs2, 0.0, env, n, seed))

    ff = VectorField(fractional_laplacian(f.c1, eps / 2.0), fractional_laplacian(f.c2, eps / 2.0))
    gg = VectorField(fractional_laplacian(g.c1, eps / 2.0), fractional_laplacian(g.c2, eps / 2.0))
    v1, _ = _advection_triple(b, gg, ff)
    v2, _ = _advection_triple(b, ff, gg)
    out.append(_record("fractional_transport_pair", v1 + v2, 0.0,
                       _envelope(b, gg, ff) + _envelope(b, ff, gg), n, seed))

    v1, _ = _advection_triple(b, g, f)
    v2, _ = _advection_triple(b, f, g)
    out.append(_record("advect_inner_pair", v1 + v2, 0.0,
                       _envelope(b, g, f) + _envelope(b, f, g), n, seed))
    return out


# ---------------------------------------------------------------------------
# paraproduct algebra


def _tensor_record(identity_id, lhs, rhs, grid_n, seed) -> IdentityRecord:
    ln = lhs.l2()
    rn = rhs.l2()
    resid = (lhs - rhs).l2()
    scale = max(ln + rn, _EPS_FLOOR)
    return IdentityRecord(identity_id, ln, rn, resid, resid / (scale + ln + rn),
                          scale, grid_n, seed)


def paraproduct_algebra_identities(
    f: VectorField, g: VectorField, lam: float = 8.0, seed: int | None = None
) -> list[IdentityRecord]:
    """Reconstruction and rearrangement identities for the flavored paraproducts."""
    n = f.grid.n
    out = []
    f_hi = freq_project_vector(f, lam, "high")
    g_hi = freq_project_vector(g, lam, "high")

    for flavor in ("tensor", "symm", "anti"):
        tri = bony_decompose(f, g, flavor)
        name = "plain" if flavor == "tensor" else flavor
        full = tensor_product(f, g, "plain" if flavor == "tensor" else flavor)
        out.append(_tensor_record(f"bony_reconstruction_{name}", tri.total(), full, n, seed))

    # rearrangements chop one paraproduct off the full product
    cases = [
        ("paraproduct_rearrangement_1", f_hi, g, "symm", "gt"),
        ("paraproduct_rearrangement_2", g_hi, f, "symm", "gt"),
        ("paraproduct_rearrangement_3", f, g_hi, "anti", "lt"),
        ("paraproduct_rearrangement_4", g, f_hi, "anti", "lt"),
    ]
    for name, a, c, flavor, drop in cases:
        tri = bony_decompose(a, c, flavor)
        full = tensor_product(a, c, flavor)
        if drop == "gt":
            lhs = full - tri.para_gt
            rhs = tri.para_lt + tri.resonant
        else:
            lhs = full - tri.para_lt
            rhs = tri.para_gt + tri.resonant
        out.append(_tensor_record(name, lhs, rhs, n, seed))
    return out


# ---------------------------------------------------------------------------
# suite driver


def identity_suite(
    grid_n: int = 64,
    seeds: range | list[int] = range(20),
    lam: float = 8.0,
    nu: float = 1.0,
    eps: float = 0.3,
) -> list[IdentityRecord]:
    """Run every identity family on freshly drawn random fields per seed."""
    grid = GridSpec(grid_n)
    records: list[IdentityRecord] = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        u = random_divfree_field(grid, rng)
        b = random_divfree_field(grid, rng)
        w_u = random_divfree_field(grid, rng)
        w_b = random_divfree_field(grid, rng)
        for rec in energy_identities(u, b, seed=seed):
            records.append(rec)
        for rec in divfree_tensor_identities(u, b, w_u, w_b, lam, nu, seed=seed):
            records.append(rec)
        for rec in transport_pair_identities(u, b, w_u, w_b, eps, seed=seed):
            records.append(rec)
        for rec in paraproduct_algebra_identities(u, w_u, lam, seed=seed):
            records.append(rec)
    return records
