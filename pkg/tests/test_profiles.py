import math

import numpy as np
import pytest

from nsbesov.multipliers import psi_hat
from nsbesov.profiles import composite_gauss, psi_center, psi_h1_squared, psi_l2_squared, psi_lp_norm, psi_profile, w_hat
from nsbesov.spectral import lp_norm, make_grid, sample_symbol, spectral_product, to_physical


@pytest.fixture(scope="module")
def psi_grid():
    g = make_grid(1 / 64, 512)
    return g, sample_symbol(g, psi_hat(), real=True)


def test_gauss_rule_integrates_polynomials():
    x, w = composite_gauss(0.0, 3.0, 4, 10)
    assert np.sum(w * x**7) == pytest.approx(3.0**8 / 8, rel=1e-14)


def test_center_value(psi_grid):
    g, f = psi_grid
    phys = to_physical(f).values
    assert phys[g.K // 2, g.K // 2] == pytest.approx(psi_center(), abs=1e-10)
    assert psi_profile(0.0)[0] == pytest.approx(psi_center(), rel=1e-14)


def test_profile_against_grid(psi_grid):
    g, f = psi_grid
    phys = to_physical(f).values
    x = g.x
    for m in (g.K // 2 + 3, g.K // 2 + 17):
        assert phys[m, g.K // 2] == pytest.approx(psi_profile(abs(x[m]))[0], abs=1e-10)


@pytest.mark.parametrize("p, rel", [(2.0, 1e-10), (4.0, 1e-10), (math.inf, 1e-9)])
def test_lp_norms(psi_grid, p, rel):
    _, f = psi_grid
    assert lp_norm(to_physical(f), p) == pytest.approx(psi_lp_norm(p), rel=rel)


def test_l1_norm_converges_to_oracle():
    # |psi| has kinks, so the lattice sum converges algebraically in dx
    errs = []
    for K in (512, 2048):
        g = make_grid(1 / 64, K)
        f = sample_symbol(g, psi_hat(), real=True)
        errs.append(abs(lp_norm(to_physical(f), 1.0) / psi_lp_norm(1.0) - 1))
    assert errs[1] < errs[0] / 8
    assert errs[1] < 1e-4


def test_l2_and_h1(psi_grid):
    assert psi_lp_norm(2.0) ** 2 == pytest.approx(psi_l2_squared(), rel=1e-8)
    g, f = psi_grid
    xi1, xi2 = g.mesh()
    h1 = (g.h / (2 * math.pi)) ** 2 * np.sum((xi1**2 + xi2**2) * np.abs(f.values) ** 2)
    assert h1 == pytest.approx(psi_h1_squared(), rel=1e-10)


def test_w_hat_at_zero_and_against_grid(psi_grid):
    assert w_hat(0.0)[0] == pytest.approx(psi_l2_squared(), rel=1e-8)
    g, f = psi_grid
    W = spectral_product(f, f)
    c = W.grid.K // 2
    for k in (0, 8, 24):
        assert W.values[c + k, c].real == pytest.approx(w_hat(k * g.h)[0], abs=1e-9)
