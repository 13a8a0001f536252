"""Exact-identity audits: partition of unity, multiplier algebra and cross-path agreement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bilinear import ModulatedProfile, bilinear_B, bilinear_B_low, low_pass_symbol
from .multipliers import (
    apply_multiplier,
    divergence,
    grad_perp,
    gradient,
    helmholtz_project,
    inv_laplacian,
    laplacian_symbol,
    lp_block_symbol,
)
from .spectral import (
    MARGIN,
    FrequencyGrid,
    SpectralField,
    _modulus,
    hermitian_reflect,
    make_grid,
    spectral_product,
    windowed_convolution,
)


def partition_of_unity_deviation(
    jmin: int = -8, jmax: int = 8, r_lo: float = 2.0**-6, r_hi: float = 2.0**6, K: int = 256
) -> tuple[float, int]:
    """``max |sum_{j=jmin}^{jmax} phi_j(xi) - 1|`` over nodes with ``r_lo <= |xi| <= r_hi``.

    The shell is covered by dyadic grids: the grid for ``2^(m-1) <= |xi| <= 2^m``
    has spacing ``2^(m+1) / K``, so every shell is sampled at the same relative
    resolution.

    Returns:
        Maximum deviation and the number of nodes checked.
    """
    worst, count = 0.0, 0
    m_lo, m_hi = math.floor(math.log2(r_lo)), math.ceil(math.log2(r_hi))
    symbols = [lp_block_symbol(j) for j in range(jmin, jmax + 1)]
    for m in range(m_lo + 1, m_hi + 1):
        grid = make_grid(2.0 ** (m + 1) / K, K)
        xi1, xi2 = grid.mesh()
        r = np.hypot(xi1, xi2)
        mask = (r >= max(2.0 ** (m - 1), r_lo)) & (r <= min(2.0**m, r_hi))
        a, b = xi1[mask], xi2[mask]
        total = np.zeros(a.shape)
        for s in symbols:
            total += s(a, b).real
        worst = max(worst, float(np.max(np.abs(total - 1))))
        count += int(mask.sum())
    return worst, count


def random_field(
    rng: np.random.Generator, grid: FrequencyGrid, radius: float, rank: int = 0, zero_mean: bool = False
) -> SpectralField:
    """Real band-limited random field with Gaussian coefficients on ``|xi| <= radius``."""
    shape = (2,) * rank + (grid.K, grid.K)
    vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    xi1, xi2 = grid.mesh()
    vals = vals * (np.hypot(xi1, xi2) <= radius)
    vals = 0.5 * (vals + hermitian_reflect(vals))
    if zero_mean:
        vals[..., grid.K // 2, grid.K // 2] = 0
    return SpectralField(grid, vals, True)


def _rel(err: SpectralField | np.ndarray, ref: float) -> float:
    values = err.values if isinstance(err, SpectralField) else err
    return float(np.max(_modulus(values))) / ref


@dataclass(frozen=True)
class AlgebraReport:
    """Worst relative residuals of the multiplier identities over a set of random fields."""

    projector_idempotent: float
    projector_kills_gradients: float
    divergence_of_grad_perp: float
    laplacian_inverse: float
    fields: int

    def as_dict(self) -> dict[str, float]:
        return {
            "projector_idempotent": self.projector_idempotent,
            "projector_kills_gradients": self.projector_kills_gradients,
            "divergence_of_grad_perp": self.divergence_of_grad_perp,
            "laplacian_inverse": self.laplacian_inverse,
        }

    def worst(self) -> float:
        return max(self.as_dict().values())


def operator_algebra(seed: int = 0, fields: int = 10, grid: FrequencyGrid | None = None) -> AlgebraReport:
    """Residuals of ``P P = P``, ``P grad = 0``, ``div grad_perp = 0`` and
    ``(-Delta)(-Delta)^-1 = I`` on ``fields`` random fields, relative to the
    size of the operand (``|xi|``-weighted where a derivative is involved).
    """
    grid = grid or make_grid(1 / 8, 128)
    rng = np.random.default_rng(seed)
    radius = 0.8 * grid.half_extent
    xi1, xi2 = grid.mesh()
    r = np.hypot(xi1, xi2)
    worst = np.zeros(4)
    for _ in range(fields):
        u = random_field(rng, grid, radius, rank=1)
        g = random_field(rng, grid, radius)
        f = random_field(rng, grid, radius, zero_mean=True)
        pu = helmholtz_project(u)
        res = [
            _rel(helmholtz_project(pu) - pu, pu.max_abs()),
            _rel(helmholtz_project(gradient(g)), gradient(g).max_abs()),
            _rel(divergence(grad_perp(g)), float(np.max(r**2 * np.abs(g.values)))),
            _rel(apply_multiplier(inv_laplacian(f), laplacian_symbol()) - f, f.max_abs()),
        ]
        worst = np.maximum(worst, res)
    return AlgebraReport(*map(float, worst), fields)


def crop(f: SpectralField, K: int) -> np.ndarray:
    """Central ``K x K`` nodes of ``f`` (same spacing), without any support check."""
    c = f.grid.K // 2
    return f.values[..., c - K // 2 : c + K // 2, c - K // 2 : c + K // 2]


@dataclass(frozen=True)
class PathReport:
    """Relative max deviations between independent computational paths."""

    bilinear_full_vs_low: float
    convolution_vs_product: float
    convolution_fft_vs_product: float

    def as_dict(self) -> dict[str, float]:
        return {
            "bilinear_full_vs_low": self.bilinear_full_vs_low,
            "convolution_vs_product": self.convolution_vs_product,
            "convolution_fft_vs_product": self.convolution_fft_vs_product,
        }


def path_agreement(M: float = 16.0, seed: int = 0, h: float = 1 / 16, radius: float = 4.0) -> PathReport:
    """Compare ``B(u, u)`` from a dense padded product with its window-only low part,
    and the windowed lattice convolution with the padded FFT product on ``|xi| <= radius``.
    """
    grid = make_grid(h, 2 * int(math.ceil((M + 4) / ((1 - MARGIN) * h))))
    window = make_grid(h, 2 * int(math.ceil(5.0 / h)))
    prof = ModulatedProfile(float(M))
    full = apply_multiplier(bilinear_B(prof.field(grid), prof.field(grid)), low_pass_symbol(0))
    low = bilinear_B_low(prof, prof, 0, window)
    a = crop(full, window.K)
    d_b = float(np.max(_modulus(a - low.values)) / np.max(_modulus(a)))

    rng = np.random.default_rng(seed)
    g0 = make_grid(h, 2 * int(math.ceil(8.0 / h)))
    f = random_field(rng, g0, 6.0)
    g = random_field(rng, g0, 6.0)
    ref = crop(spectral_product(f, g), window.K)
    xi1, xi2 = window.mesh()
    mask = np.hypot(xi1, xi2) <= radius
    scale = np.max(np.abs(ref[mask]))
    devs = []
    for method in ("direct", "fft"):
        w = windowed_convolution(f, g, window, method).values
        devs.append(float(np.max(np.abs(w - ref)[mask]) / scale))
    return PathReport(d_b, *devs)
