import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsbesov.besov import (
    BesovParams,
    BlockReport,
    aggregate,
    besov_partial,
    block_norm,
    block_table,
    chain,
    conjugate_exponent,
    default_tolerance,
    occupied_blocks,
)
from nsbesov.bilinear import ModulatedProfile
from nsbesov.errors import ConvergenceError
from nsbesov.multipliers import grad_perp, limit_block_symbol, lp_block_symbol


class TestExponents:
    @pytest.mark.parametrize("p, pc", [(1, math.inf), (math.inf, 1), (2, 2), (4, 4 / 3)])
    def test_conjugate(self, p, pc):
        assert conjugate_exponent(p) == pc

    @given(st.floats(1.01, 100))
    def test_conjugate_involution(self, p):
        assert conjugate_exponent(conjugate_exponent(p)) == pytest.approx(p, rel=1e-12)

    @pytest.mark.parametrize("p, tol", [(2, 1e-6), (4, 1e-6), (math.inf, 1e-6), (1, 1e-4), (3, 1e-4), (1.5, 1e-4)])
    def test_default_tolerance(self, p, tol):
        assert default_tolerance(p) == tol

    def test_params(self):
        bp = BesovParams.critical(4, 2, -3, 1)
        assert bp.s == pytest.approx(-0.5)
        assert list(bp.blocks()) == [-3, -2, -1, 0, 1]
        assert bp.p_conj == pytest.approx(4 / 3)
        with pytest.raises(ValueError):
            BesovParams(0.5, 2, 0, 0, 1)
        with pytest.raises(ValueError):
            BesovParams(2, 2, 0, 1, 0)


class TestAggregate:
    def test_q_values(self):
        a = [3.0, 4.0]
        assert aggregate(a, 2) == pytest.approx(5.0)
        assert aggregate(a, 1) == 7.0
        assert aggregate(a, math.inf) == 4.0
        assert aggregate([], 2) == 0.0
        assert aggregate([0.0, 0.0], 3) == 0.0

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=20), st.floats(1, 10))
    def test_monotone_in_q(self, a, q):
        assert aggregate(a, q) >= aggregate(a, q + 1) * (1 - 1e-12)
        assert aggregate(a, q) >= aggregate(a, math.inf) * (1 - 1e-12)

    def test_accepts_reports(self):
        r = BlockReport(0, 2.0, 0.0, 2.0, 2.0, 0.1, 8, 0.0, 1e-6)
        assert aggregate([r, r], 1) == 4.0


class TestOccupiedBlocks:
    def test_profile_blocks(self):
        assert occupied_blocks(14, 18) == [3, 4, 5]

    @given(st.floats(0.01, 1e6))
    def test_point_covered(self, r):
        for j in occupied_blocks(r, r):
            assert 2.0 ** (j - 1) < r * (1 + 1e-12) and r < 2.0 ** (j + 1) * (1 + 1e-12)
        assert any(lp_block_symbol(j)(r, 0.0).real > 0 for j in occupied_blocks(r, r))


class TestBlockNorm:
    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0, math.inf])
    def test_homogeneous_symbol_scale_invariant(self, p):
        """A degree -1 symbol has j-independent critically weighted blocks."""
        s = 2 / p - 1
        vals = [block_norm(limit_block_symbol(), j, p, s, K_b=512).value for j in (-7, 0, 5)]
        assert np.ptp(vals) <= 1e-12 * vals[0]

    @pytest.mark.slow
    @pytest.mark.parametrize("p, rel", [(2.0, 1e-12), (4.0, 1e-10), (1.0, 1e-3), (math.inf, 1e-2)])
    def test_two_scale_matches_dense(self, p, rel):
        """Dense reference on a grid resolving the envelope (spacing 1/32)."""
        prof = ModulatedProfile(12.0, 0.5)
        dense = chain(prof.potential_symbol(), grad_perp, label="dense profile")
        a = block_norm(prof.modulated(), 3, p)
        b = block_norm(dense, 3, p, K_b=2048, scale=256)
        assert a.method == "two-scale" and b.method == "dense"
        assert a.value == pytest.approx(b.value, rel=rel)
        if math.isinf(p):
            # free fast phase: the two-scale sup is the large-M limit, an upper bound
            assert a.value >= b.value

    def test_weight(self):
        a = block_norm(limit_block_symbol(), -2, 2.0, 0.0, K_b=512)
        b = block_norm(limit_block_symbol(), -2, 2.0, 1.0, K_b=512)
        assert b.value == pytest.approx(a.value / 4, rel=1e-14)

    def test_convergence_error(self):
        with pytest.raises(ConvergenceError):
            block_norm(ModulatedProfile(16.0).modulated(), 4, 1.0, K_b=512, tol=1e-30)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            block_norm(limit_block_symbol(), 0, 0.5)

    def test_table_ordered_and_threaded(self, monkeypatch):
        monkeypatch.setenv("NSBESOV_THREADS", "3")
        t3 = block_table(limit_block_symbol(), [2, -1, 0], 2.0, 0.0, K_b=512)
        monkeypatch.setenv("NSBESOV_THREADS", "1")
        t1 = block_table(limit_block_symbol(), [0, 2, -1], 2.0, 0.0, K_b=512)
        assert [r.j for r in t3] == [-1, 0, 2]
        assert [r.value for r in t3] == [r.value for r in t1]

    def test_partial(self):
        total, table = besov_partial(limit_block_symbol(), BesovParams.critical(2, 2, -2, 0), K_b=512)
        assert total == pytest.approx(math.sqrt(3) * table[0].value, rel=1e-12)


def test_block_grid_too_small():
    from nsbesov.errors import GridError

    with pytest.raises(GridError):
        block_norm(limit_block_symbol(), 0, 2.0, K_b=256)
