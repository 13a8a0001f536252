import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsbesov.diagnostics import operator_algebra, partition_of_unity_deviation, random_field
from nsbesov.errors import SingularityError, SymbolError
from nsbesov.multipliers import (
    Multiplier,
    apply_multiplier,
    block_annulus,
    divergence,
    grad_perp,
    gradient,
    helmholtz_project,
    hermitian_part_ok,
    inv_laplacian,
    inv_laplacian_symbol,
    limit_block_symbol,
    littlewood_paley,
    lp_block_symbol,
    projector_symbol,
    psi_hat,
    smooth_step,
    tensor_divergence,
)
from nsbesov.spectral import PatchField, make_grid, sample_symbol


class TestSmoothStep:
    @given(st.floats(0, 1))
    def test_one_inside(self, r):
        assert smooth_step(r) == 1.0

    @given(st.floats(2, 1e6))
    def test_zero_outside(self, r):
        assert smooth_step(r) == 0.0

    def test_monotone(self):
        r = np.linspace(1, 2, 2001)
        assert np.all(np.diff(smooth_step(r)) <= 0)

    def test_midpoint(self):
        assert smooth_step(1.5) == 0.5

    def test_symmetry(self):
        r = np.linspace(1, 2, 101)
        assert np.allclose(smooth_step(r) + smooth_step(3 - r), 1.0, atol=1e-15)


class TestLittlewoodPaley:
    @settings(max_examples=50)
    @given(j=st.integers(-30, 30), r=st.floats(0.01, 100))
    def test_exact_scaling(self, j, r):
        assert lp_block_symbol(j)(math.ldexp(r, j), 0.0) == lp_block_symbol(0)(r, 0.0)

    @pytest.mark.parametrize("j", [-5, 0, 3])
    def test_support(self, j):
        lo, hi = block_annulus(j)
        r = np.array([0.99 * lo, lo, hi, 1.01 * hi])
        v = lp_block_symbol(j)(r, 0 * r).real
        assert v[0] == 0 and v[-1] == 0

    def test_partition_of_unity(self):
        dev, count = partition_of_unity_deviation()
        assert dev <= 1e-12 and count > 100_000

    def test_origin_is_zero(self):
        assert lp_block_symbol(-3)(0.0, 0.0) == 0

    def test_block_applies(self, grid, rng):
        f = random_field(rng, grid, 6.0)
        total = littlewood_paley(f, -3)
        for j in range(-2, 4):
            total = total + littlewood_paley(f, j)
        xi1, xi2 = grid.mesh()
        mask = (np.hypot(xi1, xi2) >= 2**-3) & (np.hypot(xi1, xi2) <= 6.0)
        assert np.allclose(total.values[mask], f.values[mask], atol=1e-14)


class TestOperators:
    def test_algebra(self):
        rep = operator_algebra(seed=7, fields=4)
        assert rep.worst() <= 1e-12

    def test_projector_origin(self):
        assert np.allclose(projector_symbol()(0.0, 0.0), np.eye(2))

    def test_projected_is_solenoidal(self, grid, rng):
        u = helmholtz_project(random_field(rng, grid, 6.0, rank=1))
        d = divergence(u)
        assert d.max_abs() <= 1e-13 * u.max_abs() * grid.half_extent

    def test_inv_laplacian_singular(self, grid, rng):
        f = random_field(rng, grid, 4.0)
        with pytest.raises(SingularityError):
            inv_laplacian(f)

    def test_inv_laplacian_origin_value(self):
        assert inv_laplacian_symbol()(0.0, 0.0) == 0

    def test_symbol_not_finite_on_support(self, grid, rng):
        f = random_field(rng, grid, 4.0)
        bad = Multiplier(lambda a, b: 1 / (a**2 + b**2), name="bad")
        with pytest.raises(SymbolError):
            apply_multiplier(f, bad)

    def test_symbol_not_finite_off_support_ok(self, grid, rng):
        f = random_field(rng, grid, 4.0, zero_mean=True)
        bad = Multiplier(lambda a, b: 1 / (a**2 + b**2), name="bad")
        assert np.isfinite(apply_multiplier(f, bad).values).all()

    def test_rank_checks(self, grid, rng):
        s = random_field(rng, grid, 4.0)
        v = random_field(rng, grid, 4.0, rank=1)
        with pytest.raises(SymbolError):
            helmholtz_project(s)
        with pytest.raises(SymbolError):
            grad_perp(v)
        with pytest.raises(SymbolError):
            gradient(v)
        with pytest.raises(SymbolError):
            divergence(s)
        with pytest.raises(SymbolError):
            tensor_divergence(v)
        with pytest.raises(SymbolError):
            apply_multiplier(v, grad_perp_sym())

    def test_patch_field_multiplier(self, grid, rng):
        f = random_field(rng, grid, 4.0)
        dense = grad_perp(f)
        patched = grad_perp(PatchField.from_field(f)).to_field(grid)
        assert np.array_equal(dense.values, patched.values)

    def test_real_flag(self, grid, rng):
        f = random_field(rng, grid, 4.0)
        assert grad_perp(f).real
        assert not apply_multiplier(f, lambda a, b: 1j * a + 0 * b).real

    @pytest.mark.parametrize("m", [projector_symbol(), inv_laplacian_symbol(), limit_block_symbol(), psi_hat()])
    def test_hermitian(self, m):
        assert hermitian_part_ok(m)

    def test_limit_symbol_degree(self):
        m = limit_block_symbol()
        a, b = 0.3, -0.7
        assert np.allclose(m(2 * a, 2 * b), 0.5 * m(a, b))

    def test_limit_symbol_matches_composition(self):
        # (-Delta)^-1 P (0, i xi_2 .) written out
        a, b = 0.4, 1.1
        P = projector_symbol()(a, b)
        expected = P @ np.array([0, 1j * b]) / (a * a + b * b)
        assert np.allclose(limit_block_symbol()(a, b), expected)


def grad_perp_sym():
    from nsbesov.multipliers import grad_perp_symbol

    return grad_perp_symbol()


def test_sampled_psi_hat_support():
    g = make_grid(1 / 16, 128)
    f = sample_symbol(g, psi_hat(), real=True)
    assert f.support_radius() <= 2.0
