"""The bilinear operator ``B(u, v) = (-Delta)^-1 P div(u ⊗ v)`` and its low-frequency structure.

Velocity fields built from modulated profiles ``grad_perp(psi(x) cos(M x_1))``
are stored as patch spectra, so ``M`` may be far larger than any dense grid.
The low-frequency part of ``u ⊗ v`` is obtained by windowed convolution and is
then resampled onto each dyadic block grid, where the singular symbols are
applied exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .besov import Carrier, LazySpectrum, ModulatedField
from .errors import AliasingError, HypothesisError, SymbolError
from .multipliers import (
    Multiplier,
    apply_multiplier,
    grad_perp,
    helmholtz_project,
    inv_laplacian,
    lp_block_symbol,
    psi_hat,
    smooth_step,
    tensor_divergence,
)
from .spectral import (
    FrequencyGrid,
    PatchField,
    SpectralField,
    block_grid,
    check_band_limited,
    l2_norm_spectral,
    make_grid,
    pair_window_radius,
    resample,
    restrict,
    sample_symbol,
    spectral_product,
    tensor_product,
    windowed_convolution,
)

WINDOW_GRID = (1 / 32, 320)
SOLENOIDAL_TOL = 1e-10
MIN_MODULATION = 10.0
MIN_GAP = 7.0


def default_window(h: float | None = None, K: int | None = None) -> FrequencyGrid:
    return make_grid(WINDOW_GRID[0] if h is None else h, WINDOW_GRID[1] if K is None else K)


# --------------------------------------------------------------------------- profiles


@dataclass(frozen=True)
class ModulatedProfile:
    """``weight * grad_perp(psi(x) cos(M x_1))`` for the radial cutoff ``psi``.

    ``envelope`` is the symbol of ``psi``; it must be supported in ``|xi| <= 2``.
    """

    M: float
    weight: float = 1.0
    envelope: Multiplier = field(default_factory=psi_hat)

    def __post_init__(self):
        if not self.M > 0:
            raise HypothesisError(f"modulation frequency must be positive, got {self.M}")

    def scaled(self, c: float) -> "ModulatedProfile":
        return ModulatedProfile(self.M, self.weight * c, self.envelope)

    def potential_symbol(self) -> Multiplier:
        """Symbol of ``weight * psi(x) cos(M x_1)``."""
        M, w, env = self.M, self.weight, self.envelope
        return Multiplier(lambda a, b: 0.5 * w * (env(a - M, b) + env(a + M, b)), name="potential")

    def field(self, grid: FrequencyGrid) -> SpectralField:
        """Dense spectrum of the velocity on ``grid`` (needs ``M + 2`` inside the grid)."""
        phi = sample_symbol(grid, self.potential_symbol(), real=True)
        check_band_limited(phi)
        return grad_perp(phi)

    def patches(self, h: float) -> PatchField:
        """Patch spectrum of the velocity on the lattice ``h Z^2``."""
        return _profile_patches(h, [(self.M, self.weight)], self.envelope)

    def modulated(self) -> ModulatedField:
        """Two-scale description ``2 Re(exp(i M x_1) E(x))`` with ``E^ = (w/2)(-i z2, i(z1 + M)) psi^(z)``."""
        return ModulatedField((_carrier(self.M, self.weight, self.envelope),), label=f"profile M={self.M:g}")


@dataclass(frozen=True)
class ProfileSum:
    """Finite sum of modulated profiles with distinct carriers."""

    terms: tuple[ModulatedProfile, ...]

    def scaled(self, c: float) -> "ProfileSum":
        return ProfileSum(tuple(t.scaled(c) for t in self.terms))

    @property
    def frequencies(self) -> list[float]:
        return [t.M for t in self.terms]

    def field(self, grid: FrequencyGrid) -> SpectralField:
        out = self.terms[0].field(grid)
        for t in self.terms[1:]:
            out = out + t.field(grid)
        return out

    def patches(self, h: float) -> PatchField:
        env = self.terms[0].envelope
        return _profile_patches(h, [(t.M, t.weight) for t in self.terms], env)

    def modulated(self) -> ModulatedField:
        return ModulatedField(tuple(_carrier(t.M, t.weight, t.envelope) for t in self.terms), label="profile sum")


def _carrier(M: float, w: float, env: Multiplier) -> Carrier:
    def envelope(z1, z2):
        return 0.5 * np.array([-1j * z2, 1j * (z1 + M)]) * env(z1, z2)

    return Carrier(float(M), envelope, 2.0, float(w))


def _profile_patches(h: float, terms: Sequence[tuple[float, float]], env: Multiplier) -> PatchField:
    pieces = []
    for M, w in terms:
        for sign in (1, -1):
            n = int(round(sign * M / h))
            shift = h * n - sign * M

            def sym(z1, z2, g1, g2, w=w, shift=shift):
                return 0.5 * w * np.array([-1j * g2, 1j * g1]) * env(z1 + shift, z2)

            pieces.append(((n, 0), 2.0, sym))
    return PatchField.from_local_symbols(h, pieces, real=True)


def as_patches(u, h: float) -> PatchField:
    if isinstance(u, PatchField):
        return u
    if isinstance(u, SpectralField):
        return PatchField.from_field(u)
    return u.patches(h)


# --------------------------------------------------------------------------- bilinear operator


def _check_solenoidal(u: SpectralField, name: str) -> None:
    xi1, xi2 = u.grid.mesh()
    div = np.abs(xi1 * u.values[0] + xi2 * u.values[1])
    scale = np.max(np.hypot(xi1, xi2) * np.sqrt(np.sum(np.abs(u.values) ** 2, axis=0)))
    if scale > 0 and div.max() > SOLENOIDAL_TOL * scale:
        raise HypothesisError(f"{name} is not divergence free (rel. {div.max() / scale:.2e})")


def bilinear_from_tensor(T: SpectralField) -> SpectralField:
    """``(-Delta)^-1 P div T``."""
    return inv_laplacian(helmholtz_project(tensor_divergence(T)))


def bilinear_B(u: SpectralField, v: SpectralField, pad: int = 2) -> SpectralField:
    """``B(u, v)`` on the ``pad``-times extended grid via a dealiased tensor product.

    Raises:
        HypothesisError: if ``u`` or ``v`` is not divergence free.
        AliasingError: if the product does not fit the padded grid.
    """
    if u.rank != 1 or v.rank != 1:
        raise SymbolError("bilinear_B needs vector fields")
    _check_solenoidal(u, "u")
    _check_solenoidal(v, "v")
    return bilinear_from_tensor(tensor_product(u, v, pad))


def low_product_tensor(u, v, window: FrequencyGrid | None = None, method: str = "fft") -> SpectralField:
    """Low-frequency part of ``u ⊗ v`` on ``window`` (entries ``u_m v_k``).

    Every patch pair whose product reaches the window must fit inside it,
    otherwise the window would hold a truncated spectrum.
    """
    window = window or default_window()
    up, vp = as_patches(u, window.h), as_patches(v, window.h)
    need = pair_window_radius(up, vp, window)
    if need > window.half_extent:
        raise AliasingError(f"pair products reaching the window extend to {need:.4g} > {window.half_extent:.4g}")
    out = np.zeros((2, 2, window.K, window.K), dtype=complex)
    for m in range(2):
        for k in range(2):
            out[m, k] = windowed_convolution(up.component(m), vp.component(k), window, method).values
    T = SpectralField(window, out, up.real and vp.real)
    check_band_limited(T)
    return T


def low_pass_symbol(jmax: int) -> Multiplier:
    """``sum_{j <= jmax} phi_j = theta(2^-jmax |xi|)``."""
    return Multiplier(lambda a, b: smooth_step(np.ldexp(np.hypot(a, b), -int(jmax))), name=f"S_{jmax}")


def bilinear_B_low(u, v, jmax: int = 0, window: FrequencyGrid | None = None, method: str = "fft") -> SpectralField:
    """``sum_{j <= jmax} Delta_j B(u, v)`` on the window grid.

    ``u`` and ``v`` may be dense fields, patch fields or profile objects. Only
    patch pairs whose product reaches the window are convolved.
    """
    if jmax > 2:
        raise ValueError("bilinear_B_low is meant for low blocks (jmax <= 2)")
    T = low_product_tensor(u, v, window, method)
    return apply_multiplier(bilinear_from_tensor(T), low_pass_symbol(jmax))


def bilinear_spectrum(T: SpectralField, label: str = "B") -> LazySpectrum:
    """Block-ready spectrum of ``(-Delta)^-1 P div T``.

    ``T`` is resampled onto each block grid before any symbol is applied, so
    the vanishing of ``div T`` at the origin is exact on every grid.
    """
    return LazySpectrum(lambda g, r=None: bilinear_from_tensor(resample(T, g, radius=r)), label)


def leading_vector(W: SpectralField, coefficient: float = 1.0) -> SpectralField:
    """``coefficient * (0, d_2 W)``."""
    xi1, xi2 = W.grid.mesh()
    vals = np.stack([np.zeros_like(W.values), 1j * xi2 * W.values]) * coefficient
    return SpectralField(W.grid, vals, W.real)


def leading_spectrum(W: SpectralField, coefficient: float = 1.0, label: str = "leading") -> LazySpectrum:
    """``coefficient * (-Delta)^-1 P (0, d_2 W)`` with ``W`` resampled onto each block grid."""
    return LazySpectrum(
        lambda g, r=None: inv_laplacian(helmholtz_project(leading_vector(resample(W, g, radius=r), coefficient))),
        label,
    )


# --------------------------------------------------------------------------- identities


@dataclass(frozen=True)
class LeadingPair:
    """Right side of the low-frequency identity for one modulated profile.

    ``W`` is the spectrum of ``psi^2``; ``leading`` is ``(M^2/2)(0, d_2 W)`` and
    ``remainder`` is ``(1/2) div(grad_perp psi ⊗ grad_perp psi)``, both on the window.
    The tensors whose divergences give them are kept for block resampling.
    """

    M: float
    W: SpectralField
    leading: SpectralField
    remainder: SpectralField
    leading_tensor: SpectralField
    remainder_tensor: SpectralField

    @property
    def tensor(self) -> SpectralField:
        return self.leading_tensor + self.remainder_tensor


@dataclass(frozen=True)
class BlockDeviation:
    j: int
    deviation: float
    deviation_refined: float
    reference_norm: float

    @property
    def improving(self) -> bool:
        return self.deviation_refined <= max(self.deviation, 1e-12)


@dataclass(frozen=True)
class IdentityReport:
    pair: LeadingPair
    blocks: tuple[BlockDeviation, ...]

    @property
    def max_deviation(self) -> float:
        return max(max(b.deviation, b.deviation_refined) for b in self.blocks)


def envelope_products(window: FrequencyGrid, envelope: Multiplier | None = None) -> tuple[SpectralField, SpectralField]:
    """``W = FT(psi^2)`` and ``grad_perp psi ⊗ grad_perp psi`` restricted to ``window``."""
    psi = sample_symbol(window, envelope or psi_hat(), real=True)
    W = restrict(spectral_product(psi, psi), window.K)
    g = grad_perp(psi)
    G = restrict(tensor_product(g, g), window.K)
    return W, G


def leading_pair(M: float, window: FrequencyGrid | None = None, envelope: Multiplier | None = None) -> LeadingPair:
    window = window or default_window()
    W, G = envelope_products(window, envelope)
    Lt = np.zeros((2, 2, window.K, window.K), dtype=complex)
    Lt[1, 1] = 0.5 * M * M * W.values
    Lt = SpectralField(window, Lt, True)
    Rt = 0.5 * G
    return LeadingPair(float(M), W, tensor_divergence(Lt), tensor_divergence(Rt), Lt, Rt)


def block_l2(f: SpectralField, j: int) -> float:
    return l2_norm_spectral(apply_multiplier(f, lp_block_symbol(j)))


def block_deviation(lhs: SpectralField, rhs: SpectralField, j: int, K_b: int = 512) -> tuple[float, float]:
    """Relative L^2 deviation of ``Delta_j div`` of two tensors, on the block grid of ``j``."""
    g = block_grid(j, K_b)
    a = tensor_divergence(resample(lhs, g))
    b = tensor_divergence(resample(rhs, g))
    ref = block_l2(b, j)
    diff = block_l2(a - b, j)
    return (diff / ref if ref > 0 else diff), ref


def lemma21_decomposition(
    envelope: Multiplier | None,
    M: float,
    js: Sequence[int] = range(-6, 1),
    window: FrequencyGrid | None = None,
    method: str = "fft",
    K_b: int = 512,
) -> IdentityReport:
    """Check ``Delta_j div(grad_perp phi ⊗ grad_perp phi) = (M^2/2) Delta_j (0, d_2 psi^2) + (1/2) Delta_j div(grad_perp psi ⊗ grad_perp psi)``.

    ``phi = psi cos(M x_1)``. The left side is the raw windowed product of the
    modulated velocity; the right side is built from products of the envelope
    alone. Each block is checked on the given window and on a refined one
    (half the spacing, same extent).

    Raises:
        HypothesisError: if ``M < 10``.
    """
    if not M >= MIN_MODULATION:
        raise HypothesisError(f"the identity is stated for M >= {MIN_MODULATION:g}, got {M}")
    envelope = envelope or psi_hat()
    window = window or default_window()
    fine = make_grid(window.h / 2, window.K * 2)
    prof = ModulatedProfile(M, 1.0, envelope)
    results = {}
    pair = None
    for w in (window, fine):
        lhs = low_product_tensor(prof, prof, w, method)
        lp = leading_pair(M, w, envelope)
        pair = pair or lp
        results[w] = [block_deviation(lhs, lp.tensor, j, K_b) for j in js]
    blocks = tuple(
        BlockDeviation(int(j), results[window][i][0], results[fine][i][0], results[window][i][1])
        for i, j in enumerate(js)
    )
    return IdentityReport(pair, blocks)


@dataclass(frozen=True)
class CrossTermReport:
    frequencies: tuple[float, ...]
    cross_norms: tuple[float, ...]
    diagonal_norms: tuple[float, ...]
    aggregate_deviation: tuple[float, ...]
    js: tuple[int, ...]

    def cross_ok(self, rel: float = 1e-10, floor: float = 1e-12) -> bool:
        return all(c <= rel * d + floor for c, d in zip(self.cross_norms, self.diagonal_norms))


def check_gaps(frequencies: Sequence[float], min_gap: float = MIN_GAP) -> float:
    """Smallest pairwise gap; raises :class:`HypothesisError` below ``min_gap``."""
    f = sorted(float(x) for x in frequencies)
    gap = min((b - a for a, b in zip(f, f[1:])), default=math.inf)
    if gap < min_gap:
        raise HypothesisError(f"frequency gap {gap:g} < {min_gap:g}: cross terms may reach low blocks")
    return gap


def cross_term_check(
    frequencies: Sequence[float],
    a: Sequence[float],
    b: Sequence[float],
    js: Sequence[int] = range(-6, 1),
    window: FrequencyGrid | None = None,
    method: str = "fft",
    K_b: int = 512,
) -> CrossTermReport:
    """Low blocks of ``div(u ⊗ v)`` for ``u = sum a_j grad_perp phi_j`` and ``v = sum b_j grad_perp phi_j``.

    Cross terms ``j != l`` are convolved pair by pair and their block norms
    compared with those of the diagonal; the full product is compared with
    ``(1/2) sum M_j^2 a_j b_j (0, d_2 psi^2) + (1/2) sum a_j b_j div(grad_perp psi ⊗ grad_perp psi)``.
    """
    if not (len(frequencies) == len(a) == len(b)):
        raise ValueError("frequencies and coefficients must have equal length")
    check_gaps(frequencies)
    window = window or default_window()
    terms = [ModulatedProfile(float(M)) for M in frequencies]
    n = len(terms)
    zero = SpectralField(window, np.zeros((2, 2, window.K, window.K)), True)
    diag, cross = zero, zero
    for i in range(n):
        for l in range(n):
            ti, tl = terms[i].scaled(a[i]), terms[l].scaled(b[l])
            if i == l:
                diag = diag + low_product_tensor(ti, tl, window, method)
            else:
                T = _maybe_low_tensor(ti, tl, window, method)
                if T is not None:
                    cross = cross + T
    u = ProfileSum(tuple(t.scaled(c) for t, c in zip(terms, a)))
    v = ProfileSum(tuple(t.scaled(c) for t, c in zip(terms, b)))
    full = low_product_tensor(u, v, window, method)
    W, G = envelope_products(window)
    coef_lead = 0.5 * sum(M * M * x * y for M, x, y in zip(frequencies, a, b))
    coef_rem = 0.5 * sum(x * y for x, y in zip(a, b))
    rhs = np.zeros((2, 2, window.K, window.K), dtype=complex)
    rhs[1, 1] = coef_lead * W.values
    rhs = SpectralField(window, rhs, True) + coef_rem * G
    cross_n, diag_n, dev = [], [], []
    for j in js:
        g = block_grid(j, K_b)
        cross_n.append(block_l2(tensor_divergence(resample(cross, g)), j))
        diag_n.append(block_l2(tensor_divergence(resample(diag, g)), j))
        dev.append(block_deviation(full, rhs, j, K_b)[0])
    return CrossTermReport(tuple(float(x) for x in frequencies), tuple(cross_n), tuple(diag_n), tuple(dev),
                           tuple(int(j) for j in js))


def _maybe_low_tensor(u, v, window, method) -> SpectralField | None:
    up, vp = as_patches(u, window.h), as_patches(v, window.h)
    if pair_window_radius(up, vp, window) == 0:
        return None
    return low_product_tensor(up, vp, window, method)
