"""Core field containers, operators, and alias-free products."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochmhd.grid import GridSpec, SpectralField, TensorField2, VectorField
from stochmhd.spectral import (
    advect,
    dealiased_product,
    field_from_records,
    field_to_records,
    fractional_laplacian,
    grad_decompose,
    heat_propagate,
    inner,
    inner_vector,
    leray_project,
    random_divfree_field,
    random_scalar_field,
    tensor_product,
    triple_product_mean,
)


def single_mode(grid, k1, k2, amp=1.0):
    c = np.zeros((grid.n, grid.n), dtype=np.complex128)
    c[k1 % grid.n, k2 % grid.n] = amp
    c[(-k1) % grid.n, (-k2) % grid.n] = np.conj(amp)
    return SpectralField(grid, c)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(31)
    with pytest.raises(ValueError):
        GridSpec(64, padding_factor=1.2)


def test_roundtrip_physical(grid64, rng):
    f = random_scalar_field(grid64, rng)
    g = SpectralField.from_physical(grid64, f.values())
    assert (f - g).l2() < 1e-14 * f.l2()


def test_leray_annihilates_gradients(grid64, rng):
    phi = random_scalar_field(grid64, rng)
    grad_phi = VectorField(phi.deriv(1), phi.deriv(2))
    projected = leray_project(grad_phi)
    assert projected.l2() < 1e-13 * grad_phi.l2()


def test_leray_fixes_divergence_free(grid64, rng):
    u = random_divfree_field(grid64, rng)
    assert (leray_project(u) - u).l2() < 1e-13 * u.l2()


def test_leray_single_modes(grid64):
    # coefficient (1, 0) at k = (1, 0) is parallel to k, so it is annihilated
    f = VectorField(single_mode(grid64, 1, 0), SpectralField.zeros(grid64))
    p = leray_project(f)
    assert p.l2() < 1e-15
    # the same coefficient at k = (0, 1) is already along k-perp and survives
    f = VectorField(single_mode(grid64, 0, 1), SpectralField.zeros(grid64))
    p = leray_project(f)
    assert abs(p.c1.coeffs[0, 1] - 1.0) < 1e-14
    assert abs(p.c2.coeffs[0, 1]) < 1e-14


def test_leray_idempotent_orthogonal(grid64, rng):
    f = VectorField(random_scalar_field(grid64, rng), random_scalar_field(grid64, rng))
    g = VectorField(random_scalar_field(grid64, rng), random_scalar_field(grid64, rng))
    pf, pg = leray_project(f), leray_project(g)
    assert (leray_project(pf) - pf).l2() < 1e-13 * pf.l2()
    cross = inner_vector(f - pf, pg)
    assert abs(cross) < 1e-12 * max(f.l2() * g.l2(), 1e-30)


def test_tensor_flavor_identities(divfree_pair):
    u, v = divfree_pair
    sym_uv = tensor_product(u, v, "symm")
    sym_vu = tensor_product(v, u, "symm")
    anti_uv = tensor_product(u, v, "anti")
    anti_vu = tensor_product(v, u, "anti")
    plain = tensor_product(u, v, "plain")
    assert (sym_uv - sym_vu).l2() < 1e-14 * plain.l2()
    assert (anti_uv + anti_vu).l2() < 1e-14 * plain.l2()
    assert ((sym_uv + anti_uv) - plain).l2() < 1e-13 * plain.l2()


def test_divergence_of_constant_tensor(grid64):
    one = SpectralField(grid64, np.zeros((grid64.n, grid64.n), dtype=complex))
    c = one.coeffs.copy()
    c[0, 0] = 2.5
    t = TensorField2([[SpectralField(grid64, c, mask=False)] * 2] * 2)
    assert t.divergence().l2() == 0.0


def test_tensor_divergence_matches_advection(divfree_pair):
    u, b = divfree_pair
    lhs = tensor_product(u, u).divergence()
    rhs = advect(u, u)
    assert (lhs - rhs).l2() < 1e-12 * rhs.l2()
    # induction-shaped combination
    lhs = (tensor_product(b, u) - tensor_product(u, b)).divergence()
    rhs = advect(u, b) - advect(b, u)
    assert (lhs - rhs).l2() < 1e-12 * max(rhs.l2(), 1e-30)


def test_grad_decompose(divfree_pair):
    u, _ = divfree_pair
    sym, anti = grad_decompose(u)
    from stochmhd.spectral import grad

    full = grad(u)
    assert ((sym + anti) - full).l2() < 1e-14 * full.l2()
    assert sym.trace().l2() < 1e-12 * full.l2()  # divergence-free input
    assert sym.symmetry_defect() < 1e-14 * full.l2()


def test_grad_decompose_curl_free(grid64, rng):
    phi = random_scalar_field(grid64, rng)
    gradient = VectorField(phi.deriv(1), phi.deriv(2))
    _, anti = grad_decompose(gradient)
    assert anti.l2() < 1e-13 * gradient.l2()


def test_heat_propagate():
    grid = GridSpec(32)
    f = single_mode(grid, 1, 0)
    assert (heat_propagate(f, 0.0, 1.0) - f).l2() == 0.0
    halved = heat_propagate(f, np.log(2.0), 1.0)
    assert abs(halved.coeffs[1, 0] - 0.5) < 1e-15
    const = SpectralField(grid, np.zeros((32, 32), dtype=complex), mask=False)
    c = const.coeffs.copy()
    c[0, 0] = 3.0
    const = SpectralField(grid, c, mask=False)
    assert (heat_propagate(const, 1.0, 1.0) - const).l2() == 0.0
    with pytest.raises(ValueError):
        heat_propagate(f, -0.1, 1.0)


def test_inner_products(grid64, rng):
    f = random_scalar_field(grid64, rng)
    assert inner(f, f) >= 0
    a = single_mode(grid64, 1, 0)
    b = single_mode(grid64, 0, 1)
    assert abs(inner(a, b)) < 1e-16
    # cos wave of unit coefficients: integral of its square is 2
    assert abs(inner(a, a) - 2.0) < 1e-15


def test_quadrature_vs_parseval(scalar_pair):
    f, g = scalar_pair
    prod = dealiased_product(g, g)
    via_parseval = inner(f, prod)
    via_quadrature = triple_product_mean(f, g, g)
    assert abs(via_parseval - via_quadrature) < 1e-12 * (abs(via_parseval) + 1e-30)


def test_fractional_laplacian(grid64, rng):
    f = random_scalar_field(grid64, rng)
    assert (fractional_laplacian(f, 0.0) - f).l2() == 0.0
    m = single_mode(grid64, 2, 0)  # |k|^2 = 4
    assert abs(fractional_laplacian(m, 1.0).coeffs[2, 0] - 4.0) < 1e-14
    twice_half = fractional_laplacian(fractional_laplacian(f, 0.5), 0.5)
    assert (twice_half - fractional_laplacian(f, 1.0)).l2() < 1e-12 * f.l2()
    bad = SpectralField(grid64, np.zeros((64, 64), dtype=complex), mask=False)
    c = bad.coeffs.copy()
    c[0, 0] = 1.0
    bad = SpectralField(grid64, c, mask=False)
    with pytest.raises(ValueError):
        fractional_laplacian(bad, -0.5)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_operations_preserve_realness(seed):
    grid = GridSpec(32)
    rng = np.random.default_rng(seed)
    f = random_scalar_field(grid, rng)
    g = random_scalar_field(grid, rng)
    for out in (
        dealiased_product(f, g),
        heat_propagate(f, 0.3, 0.7),
        fractional_laplacian(f, 0.5),
        f.deriv(1) + g.deriv(2),
    ):
        scale = max(np.max(np.abs(out.values())), 1e-30)
        assert out.imag_defect() < 1e-13 * max(scale, 1.0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_product_dealiasing_is_exact(seed):
    """Physical quadrature and the Parseval pairing agree for quadratics."""
    grid = GridSpec(32)
    rng = np.random.default_rng(seed)
    f = random_scalar_field(grid, rng)
    g = random_scalar_field(grid, rng)
    h = random_scalar_field(grid, rng)
    lhs = inner(h, dealiased_product(f, g))
    rhs = triple_product_mean(h, f, g)
    assert abs(lhs - rhs) < 1e-12 * (abs(lhs) + abs(rhs) + 1e-30)


def test_block_structure_checks(grid64, rng):
    from stochmhd.renorm import grad_block_matrix

    x_u = random_divfree_field(grid64, rng)
    x_b = random_divfree_field(grid64, rng)
    m4 = grad_block_matrix(x_u, x_b)
    assert m4.block_structure_defect() < 1e-12 * m4.l2()


def test_field_records_roundtrip(grid64, rng):
    f = random_scalar_field(grid64, rng)
    rec = field_to_records(f)
    g = field_from_records(grid64, rec)
    assert (f - g).l2() < 1e-15 * f.l2()
