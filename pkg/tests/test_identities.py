"""Cancellation identities on random band-limited solenoidal fields."""

import numpy as np
import pytest

from stochmhd.grid import VectorField
from stochmhd.identities import (
    divfree_tensor_identities,
    energy_identities,
    identity_suite,
    paraproduct_algebra_identities,
    transport_pair_identities,
)
from stochmhd.spectral import random_divfree_field, random_scalar_field


def _fields(grid, seed, count=4):
    rng = np.random.default_rng(seed)
    return [random_divfree_field(grid, rng) for _ in range(count)]


def test_rejects_non_solenoidal_inputs(grid32, rng):
    bad = VectorField(random_scalar_field(grid32, rng), random_scalar_field(grid32, rng))
    good = random_divfree_field(grid32, rng)
    with pytest.raises(ValueError):
        energy_identities(bad, good)
    with pytest.raises(ValueError):
        transport_pair_identities(good, bad, good, good)


def test_energy_identities_pass(grid64):
    u, b, _, _ = _fields(grid64, 1)
    for rec in energy_identities(u, b):
        assert rec.relative_residual < 1e-12, rec


def test_obstruction_vanishes_without_magnetic_field(grid64):
    u, _, _, _ = _fields(grid64, 2)
    recs = {r.identity_id: r for r in energy_identities(u, VectorField.zeros(grid64))}
    rec = recs["mixed_laplacian_obstruction"]
    assert abs(rec.lhs) < 1e-12
    assert abs(rec.rhs) < 1e-12


def test_obstruction_has_power(grid64):
    u, b, _, _ = _fields(grid64, 3)
    recs = {r.identity_id: r for r in energy_identities(u, b)}
    rec = recs["mixed_laplacian_obstruction"]
    assert abs(rec.lhs) > 1e-3 * rec.scale


def test_divfree_tensor_identities_pass(grid64):
    x_u, x_b, w_u, w_b = _fields(grid64, 4)
    for rec in divfree_tensor_identities(x_u, x_b, w_u, w_b, lam=8.0):
        assert rec.relative_residual < 1e-12, rec


def test_gradient_pairing_reduces_without_magnetic_noise(grid64):
    x_u, _, w_u, w_b = _fields(grid64, 5)
    recs = {
        r.identity_id: r
        for r in divfree_tensor_identities(x_u, VectorField.zeros(grid64), w_u, w_b, 8.0)
    }
    # the cross-channel sums lose their content but still balance
    assert recs["cross_advection_sum_1"].relative_residual < 1e-12
    assert recs["gradient_matrix_pairing"].relative_residual < 1e-12


def test_antisymmetric_pairing_cancels_for_equal_arguments(grid64):
    x_u, x_b, w, _ = _fields(grid64, 6)
    recs = divfree_tensor_identities(x_u, x_b, w, w, lam=8.0)
    by_id = {r.identity_id: r for r in recs}
    rec = by_id["gradient_matrix_pairing"]
    assert rec.relative_residual < 1e-12
    # with equal arguments the antisymmetric-gradient pairings drop pairwise,
    # leaving only the symmetric-gradient difference
    from stochmhd.littlewood_paley import freq_project_vector
    from stochmhd.spectral import grad_decompose, inner_vector, matvec

    xl_b = freq_project_vector(x_b, 8.0, "low")
    _, anti_b = grad_decompose(xl_b)
    cross = inner_vector(matvec(anti_b, w), w)
    assert abs(cross) < 1e-12 * max(abs(rec.lhs), 1.0)


def test_transport_pairs_pass(grid64):
    u, b, f, g = _fields(grid64, 7)
    for eps in (0.0, 0.3, 0.5):
        for rec in transport_pair_identities(u, b, f, g, eps):
            assert rec.relative_residual < 1e-12, (eps, rec)
    with pytest.raises(ValueError):
        transport_pair_identities(u, b, f, g, eps=0.7)


def test_fractional_pair_reduces_to_plain_at_zero_exponent(grid64):
    u, b, f, g = _fields(grid64, 8)
    recs = transport_pair_identities(u, b, f, g, eps=0.0)
    by_id = {r.identity_id: r for r in recs}
    assert by_id["fractional_transport_pair"].lhs == pytest.approx(
        by_id["advect_inner_pair"].lhs, abs=1e-14
    )


def test_paraproduct_algebra_passes(grid64):
    _, _, f, g = _fields(grid64, 9)
    for rec in paraproduct_algebra_identities(f, g, lam=8.0):
        assert rec.relative_residual < 1e-12, rec


def test_antisymmetric_paraproducts_of_equal_pair_sum_to_zero(grid64):
    from stochmhd.littlewood_paley import bony_decompose

    _, _, f, _ = _fields(grid64, 10)
    tri = bony_decompose(f, f, "anti")
    assert tri.total().l2() < 1e-12 * max(f.l2() ** 2, 1e-30)


def test_residuals_scale_like_roundoff_under_refinement():
    """Residual levels move by far less than one order per grid doubling."""
    levels = {}
    for n in (32, 64, 128):
        recs = identity_suite(grid_n=n, seeds=range(3))
        worst: dict[str, float] = {}
        for r in recs:
            worst[r.identity_id] = max(worst.get(r.identity_id, 0.0), r.relative_residual)
        levels[n] = worst
    for key in levels[32]:
        for a, b in ((32, 64), (64, 128)):
            num = max(levels[b][key], 1e-18)
            den = max(levels[a][key], 1e-18)
            assert num / den < 10.0, (key, levels[a][key], levels[b][key])


def test_suite_passes_at_tolerance():
    recs = identity_suite(grid_n=32, seeds=range(2))
    assert all(r.relative_residual < 1e-10 for r in recs)
