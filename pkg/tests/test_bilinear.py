import numpy as np
import pytest

from nsbesov.besov import block_norm
from nsbesov.bilinear import (
    ModulatedProfile,
    ProfileSum,
    as_patches,
    bilinear_B,
    bilinear_B_low,
    bilinear_spectrum,
    check_gaps,
    cross_term_check,
    default_window,
    envelope_products,
    leading_pair,
    leading_spectrum,
    lemma21_decomposition,
    low_product_tensor,
)
from nsbesov.diagnostics import random_field
from nsbesov.errors import AliasingError, HypothesisError
from nsbesov.multipliers import divergence
from nsbesov.spectral import make_grid


@pytest.fixture(scope="module")
def window():
    return default_window()


class TestProfiles:
    def test_positive_frequency(self):
        with pytest.raises(HypothesisError):
            ModulatedProfile(0.0)

    def test_divergence_free(self):
        g = make_grid(1 / 16, 640)
        u = ModulatedProfile(16.0).field(g)
        assert divergence(u).max_abs() <= 1e-13 * u.max_abs() * g.half_extent

    @pytest.mark.parametrize("M", [14.0, 14.01, 15.3])
    def test_patches_match_dense(self, M):
        g = make_grid(1 / 16, 640)
        prof = ModulatedProfile(M, 0.7)
        dense = prof.field(g)
        patched = prof.patches(g.h).to_field(g)
        assert np.max(np.abs(patched.values - dense.values)) <= 1e-13 * dense.max_abs()

    def test_sum_frequencies_and_scaling(self):
        s = ProfileSum((ModulatedProfile(16.0), ModulatedProfile(32.0, 2.0))).scaled(0.5)
        assert s.frequencies == [16.0, 32.0]
        assert [t.weight for t in s.terms] == [0.5, 1.0]

    def test_as_patches_passthrough(self):
        pf = ModulatedProfile(16.0).patches(1 / 32)
        assert as_patches(pf, 1 / 32) is pf


class TestBilinear:
    def test_requires_solenoidal(self, rng):
        g = make_grid(1 / 8, 64)
        u = random_field(rng, g, 2.0, rank=1)
        with pytest.raises(HypothesisError):
            bilinear_B(u, u)

    def test_low_matches_full(self):
        g = make_grid(1 / 16, 512)
        prof = ModulatedProfile(12.0)
        full = bilinear_B(prof.field(g), prof.field(g))
        w = make_grid(1 / 16, 160)
        low = bilinear_B_low(prof, prof, 0, w)
        c = full.grid.K // 2
        ref = full.values[..., c - 80 : c + 80, c - 80 : c + 80]
        from nsbesov.multipliers import apply_multiplier
        from nsbesov.bilinear import low_pass_symbol

        ref = apply_multiplier(type(full)(w, ref, True), low_pass_symbol(0)).values
        assert np.max(np.abs(low.values - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_low_rejects_high_jmax(self):
        with pytest.raises(ValueError):
            bilinear_B_low(ModulatedProfile(16.0), ModulatedProfile(16.0), jmax=5)

    def test_window_too_small(self):
        with pytest.raises(AliasingError):
            low_product_tensor(ModulatedProfile(16.0), ModulatedProfile(16.0), default_window(1 / 32, 64))

    def test_remainder_vanishes_for_radial_envelope(self, window):
        W, G = envelope_products(window)
        lead = block_norm(leading_spectrum(W, 1.0), -3, 2.0).value
        rem = block_norm(bilinear_spectrum(G), -3, 2.0, floor=1e-12 * lead).value
        assert rem <= 1e-10 * lead

    def test_leading_pair_structure(self, window):
        lp = leading_pair(16.0, window)
        assert np.all(lp.leading.values[0] == 0)
        assert lp.tensor.rank == 2


class TestIdentities:
    def test_lemma_small(self, window):
        rep = lemma21_decomposition(None, 16.0, [-1, 0], window)
        assert rep.max_deviation <= 1e-8
        assert all(b.improving for b in rep.blocks)

    def test_lemma_hypothesis(self):
        with pytest.raises(HypothesisError):
            lemma21_decomposition(None, 8.0)

    def test_gaps(self):
        assert check_gaps([160, 176, 192]) == 16
        with pytest.raises(HypothesisError):
            check_gaps([160, 163])

    def test_cross_terms_two(self, window):
        rep = cross_term_check([160.0, 176.0], [1.0, 0.5], [1.0, 2.0], [-1, 0], window)
        assert all(c <= 1e-10 * d for c, d in zip(rep.cross_norms, rep.diagonal_norms))
        assert max(rep.aggregate_deviation) <= 1e-8

    def test_cross_terms_length_mismatch(self):
        with pytest.raises(ValueError):
            cross_term_check([160.0, 176.0], [1.0], [1.0, 1.0])
