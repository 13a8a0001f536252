"""Band-limited functions on R^2 represented by samples of their Fourier transform.

Conventions::

    f^(xi) = int f(x) exp(-i x.xi) dx,     f(x) = (2 pi)^-2 int f^(xi) exp(i x.xi) dxi

A :class:`FrequencyGrid` with spacing ``h`` and ``K`` points per axis carries the
nodes ``xi_k = h (k - K/2)``. Its dual physical lattice lives on the torus of
period ``L = 2 pi / h`` with spacing ``dx = L / K``.  All frequency nodes of all
grids with the same ``h`` sit on the global lattice ``h Z^2``; a dense grid node
``k`` has global index ``k - K/2``.  :class:`PatchField` uses the global index to
store spectra made of a few small, far-apart patches (modulated profiles whose
carrier frequency is too large for any dense grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.signal import fftconvolve

from . import _kernels
from .errors import AliasingError, BudgetError, GridError, SymbolError

SUPPORT_TOL = 1e-13
MARGIN = 0.1
HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-10
ACTIVE_NODE_BUDGET = 10_000_000

Symbol = Callable[[np.ndarray, np.ndarray], np.ndarray]

RANK_NAMES = {0: "scalar", 1: "vector", 2: "tensor"}


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform square lattice in frequency space and its dual physical torus."""

    h: float
    K: int

    @property
    def half_extent(self) -> float:
        return self.K * self.h / 2

    @property
    def period(self) -> float:
        return 2 * math.pi / self.h

    @property
    def dx(self) -> float:
        return self.period / self.K

    @property
    def origin_index(self) -> int:
        """Global lattice index of node ``k = 0``."""
        return -self.K // 2

    @property
    def xi(self) -> np.ndarray:
        return self.h * (np.arange(self.K) - self.K // 2)

    @property
    def x(self) -> np.ndarray:
        return self.dx * (np.arange(self.K) - self.K // 2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xi, self.xi, indexing="ij")

    def physical_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        """Same spacing, ``factor`` times the extent (physical spacing divided by ``factor``)."""
        return FrequencyGrid(self.h, self.K * factor)


def make_grid(h: float, K: int) -> FrequencyGrid:
    """Build a :class:`FrequencyGrid`, validating ``h > 0`` and even ``K >= 8``.

    >>> g = make_grid(1 / 32, 512)
    >>> g.half_extent, g.dx == math.pi / 8
    (8.0, True)
    """
    if not (isinstance(K, (int, np.integer)) and not isinstance(K, bool)):
        raise GridError(f"K must be an integer, got {K!r}")
    if K % 2 or K < 8:
        raise GridError(f"K must be even and >= 8, got {K}")
    h = float(h)
    if not (h > 0 and math.isfinite(h)):
        raise GridError(f"spacing must be positive and finite, got {h}")
    return FrequencyGrid(h, int(K))


def fitting_grid(h: float, radius: float, margin: float = MARGIN) -> FrequencyGrid:
    """Smallest FFT-friendly grid with spacing ``h`` holding support ``radius`` within the margin."""
    need = 2 * math.ceil(radius / ((1 - margin) * h)) + 2
    K = sfft.next_fast_len(need)
    K += K % 2
    return make_grid(h, max(K, 8))


def hermitian_reflect(values: np.ndarray) -> np.ndarray:
    """Return ``conj(values(-xi))`` on the lattice (index ``k -> K - k`` mod ``K``)."""
    flipped = np.flip(values, axis=(-2, -1))
    return np.conj(np.roll(flipped, 1, axis=(-2, -1)))


def _modulus(values: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean modulus over the component axes."""
    if values.ndim == 2:
        return np.abs(values)
    comps = values.reshape(-1, *values.shape[-2:])
    return np.sqrt(np.sum(comps.real**2 + comps.imag**2, axis=0))


def _check_values(grid: FrequencyGrid, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[-2:] != (grid.K, grid.K):
        raise GridError(f"values shape {values.shape} does not match grid K={grid.K}")
    if values.ndim - 2 not in RANK_NAMES or any(n != 2 for n in values.shape[:-2]):
        raise GridError(f"unsupported component shape {values.shape[:-2]}")
    return values


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Samples ``f^(xi_k)`` of a continuous Fourier transform on a grid.

    ``values`` has shape ``(K, K)``, ``(2, K, K)`` or ``(2, 2, K, K)`` for scalar,
    vector and tensor fields. With ``real=True`` the samples are Hermitian
    symmetric, i.e. the physical field is real.
    """

    grid: FrequencyGrid
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        values = _check_values(self.grid, self.values).astype(complex, copy=False)
        object.__setattr__(self, "values", values)
        if self.real:
            scale = self.max_abs()
            if scale > 0:
                # the first row and column (xi = -Xi) have no partner node on the grid
                diff = values - hermitian_reflect(values)
                err = np.max(np.abs(diff[..., 1:, 1:]))
                if err > HERMITIAN_TOL * scale:
                    raise SymbolError(f"real field is not Hermitian symmetric (rel. err {err / scale:.2e})")

    @classmethod
    def trusted(cls, grid: FrequencyGrid, values: np.ndarray, real: bool = False) -> "SpectralField":
        """Construct without re-verifying symmetry (for outputs of symmetry-preserving operations)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", np.asarray(values, dtype=complex))
        object.__setattr__(obj, "real", real)
        return obj

    @property
    def rank(self) -> int:
        return self.values.ndim - 2

    @property
    def rank_name(self) -> str:
        return RANK_NAMES[self.rank]

    def component(self, *idx: int) -> "SpectralField":
        return SpectralField(self.grid, self.values[idx], self.real)

    def max_abs(self) -> float:
        return float(_modulus(self.values).max())

    def support_radius(self, tol: float = SUPPORT_TOL) -> float:
        mod = _modulus(self.values)
        top = mod.max()
        if top == 0:
            return 0.0
        xi1, xi2 = self.grid.mesh()
        return float(np.sqrt(xi1**2 + xi2**2)[mod > tol * top].max())

    def with_values(self, values: np.ndarray, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, values, self.real if real is None else real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField.trusted(self.grid, self.values + other.values, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField.trusted(self.grid, self.values - other.values, self.real and other.real)

    def __neg__(self) -> "SpectralField":
        return SpectralField.trusted(self.grid, -self.values, self.real)

    def __mul__(self, c) -> "SpectralField":
        c = complex(c)
        return SpectralField.trusted(self.grid, c * self.values, self.real and c.imag == 0)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Samples ``f(x_m)`` on the dual torus of ``grid``."""

    grid: FrequencyGrid
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))

    @property
    def rank(self) -> int:
        return self.values.ndim - 2


def _same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridError(f"grid mismatch: {a.grid} vs {b.grid}")


def _evaluate(symbol: Symbol, xi1: np.ndarray, xi2: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(symbol(xi1, xi2), dtype=complex)
    return np.broadcast_to(vals, vals.shape[:-2] + xi1.shape) if vals.ndim >= 2 else np.broadcast_to(vals, xi1.shape)


def sample_symbol(grid: FrequencyGrid, symbol: Symbol, real: bool = False) -> SpectralField:
    """Evaluate a closed-form symbol at every node of ``grid``.

    The symbol receives the two coordinate meshes and may return a scalar
    array, a ``(2, ...)`` vector or a ``(2, 2, ...)`` matrix. Hermitian
    symmetry is enforced when ``real`` is set.
    """
    xi1, xi2 = grid.mesh()
    vals = np.array(_evaluate(symbol, xi1, xi2))
    bad = ~np.isfinite(vals)
    if bad.any():
        where = np.argwhere(bad.reshape(-1, grid.K, grid.K).any(axis=0))[0]
        raise SymbolError(f"symbol is not finite at node xi=({xi1[tuple(where)]:.6g}, {xi2[tuple(where)]:.6g})")
    if real:
        vals = 0.5 * (vals + hermitian_reflect(vals))
    return SpectralField(grid, vals, real)


def check_band_limited(f: SpectralField, margin: float = MARGIN) -> None:
    radius = f.support_radius()
    limit = f.grid.half_extent * (1 - margin)
    if radius > limit:
        raise AliasingError(
            f"support radius {radius:.6g} exceeds {limit:.6g} = (1-{margin}) x half extent of grid {f.grid}"
        )


def _centered_ifft(values: np.ndarray) -> np.ndarray:
    return sfft.fftshift(sfft.ifft2(sfft.ifftshift(values, axes=(-2, -1)), axes=(-2, -1)), axes=(-2, -1))


def _centered_fft(values: np.ndarray) -> np.ndarray:
    return sfft.fftshift(sfft.fft2(sfft.ifftshift(values, axes=(-2, -1)), axes=(-2, -1)), axes=(-2, -1))


def to_physical(f: SpectralField, check: bool = True) -> PhysicalField:
    """Inverse transform by the quadrature ``(h / 2 pi)^2 sum_k f^(xi_k) exp(i x_m.xi_k)``."""
    if check:
        check_band_limited(f)
    g = f.grid
    vals = (g.h * g.K / (2 * math.pi)) ** 2 * _centered_ifft(f.values)
    if f.real:
        scale = np.max(np.abs(vals))
        if scale > 0 and np.max(np.abs(vals.imag)) > IMAG_TOL * scale:
            raise AliasingError("imaginary residue of a real field exceeds tolerance")
        vals = vals.real
    return PhysicalField(g, vals, f.real)


def to_spectral(f: PhysicalField) -> SpectralField:
    """Forward transform ``dx^2 sum_m f(x_m) exp(-i x_m.xi_k)``, the inverse of :func:`to_physical`."""
    g = f.grid
    vals = g.dx**2 * _centered_fft(np.asarray(f.values, dtype=complex))
    if f.real:
        vals = 0.5 * (vals + hermitian_reflect(vals))
    return SpectralField(g, vals, f.real)


def lp_norm(f: PhysicalField, p: float) -> float:
    """Torus ``L^p`` norm; vector and tensor fields use the pointwise Euclidean modulus."""
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    mod = _modulus(np.asarray(f.values))
    if math.isinf(p):
        return float(mod.max())
    return float((f.grid.dx**2 * _kernels.power_sum(mod, p)) ** (1 / p))


def l2_norm_spectral(f: SpectralField) -> float:
    """Plancherel: ``(2 pi)^-1 (h^2 sum |f^|^2)^(1/2)``."""
    return float(f.grid.h / (2 * math.pi) * math.sqrt(np.sum(np.abs(f.values) ** 2)))


def zero_pad(f: SpectralField, K: int) -> SpectralField:
    """Embed ``f`` in a larger grid with the same spacing."""
    if K < f.grid.K or K % 2:
        raise GridError(f"cannot pad K={f.grid.K} to K={K}")
    off = (K - f.grid.K) // 2
    out = np.zeros(f.values.shape[:-2] + (K, K), dtype=complex)
    out[..., off : off + f.grid.K, off : off + f.grid.K] = f.values
    return SpectralField(FrequencyGrid(f.grid.h, K), out, f.real)


def restrict(f: SpectralField, K: int) -> SpectralField:
    """Crop ``f`` to a smaller grid with the same spacing; refuses to drop support."""
    if K > f.grid.K or K % 2:
        raise GridError(f"cannot restrict K={f.grid.K} to K={K}")
    off = (f.grid.K - K) // 2
    out = f.values[..., off : off + K, off : off + K]
    mod = _modulus(f.values)
    outside = mod.copy()
    outside[off : off + K, off : off + K] = 0
    if outside.max() > SUPPORT_TOL * mod.max():
        raise AliasingError(f"restricting to K={K} would drop spectral content")
    return SpectralField(FrequencyGrid(f.grid.h, K), out.copy(), f.real)


def _broadcast_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ra, rb = a.ndim - 2, b.ndim - 2
    if ra and rb and a.shape != b.shape:
        raise GridError(f"cannot multiply components of shapes {a.shape[:-2]} and {b.shape[:-2]}")
    return a, b


def spectral_product(f: SpectralField, g: SpectralField, pad: int = 2) -> SpectralField:
    """Transform of the pointwise product ``f g`` on the ``pad``-times extended grid.

    Both inputs are zero padded before physical multiplication, so the result is
    the exact lattice convolution ``(2 pi)^-2 h^2 sum f^(eta) g^(xi - eta)``
    whenever the combined support fits the padded grid.  Components multiply
    elementwise (a scalar broadcasts against any rank).
    """
    _same_grid(f, g)
    K2 = f.grid.K * pad
    limit = (1 - MARGIN) * K2 * f.grid.h / 2
    if f.support_radius() + g.support_radius() > limit:
        raise AliasingError(
            f"combined support {f.support_radius() + g.support_radius():.6g} exceeds padded limit {limit:.6g}"
        )
    fp, gp = zero_pad(f, K2), zero_pad(g, K2)
    a, b = _broadcast_pair(to_physical(fp, check=False).values, to_physical(gp, check=False).values)
    prod = PhysicalField(fp.grid, a * b, f.real and g.real)
    return to_spectral(prod)


def tensor_product(u: SpectralField, v: SpectralField, pad: int = 2) -> SpectralField:
    """``(u ⊗ v)_{mk} = u_m v_k`` for two vector fields, via dealiased products."""
    if u.rank != 1 or v.rank != 1:
        raise GridError("tensor_product needs two vector fields")
    _same_grid(u, v)
    K2 = u.grid.K * pad
    limit = (1 - MARGIN) * K2 * u.grid.h / 2
    if u.support_radius() + v.support_radius() > limit:
        raise AliasingError("combined support exceeds the padded grid")
    up = to_physical(zero_pad(u, K2), check=False).values
    vp = to_physical(zero_pad(v, K2), check=False).values
    prod = up[:, None] * vp[None, :]
    return to_spectral(PhysicalField(FrequencyGrid(u.grid.h, K2), prod, u.real and v.real))


# --------------------------------------------------------------------------- patches


@dataclass(frozen=True, eq=False)
class Patch:
    """Dense block of lattice samples; ``origin`` is the global index of ``values[..., 0, 0]``."""

    origin: tuple[int, int]
    values: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[-2:]


@dataclass(frozen=True, eq=False)
class PatchField:
    """Spectrum on the global lattice ``h Z^2`` stored as a list of dense patches.

    Patches may sit at arbitrarily large frequencies; coordinates near a patch
    are always formed from integer offsets so that no precision is lost.
    """

    h: float
    patches: tuple[Patch, ...]
    real: bool = False
    component_shape: tuple[int, ...] = field(default=())

    @classmethod
    def from_field(cls, f: SpectralField) -> "PatchField":
        o = f.grid.origin_index
        return cls(f.grid.h, (Patch((o, o), f.values),), f.real, f.values.shape[:-2])

    @classmethod
    def from_local_symbols(
        cls,
        h: float,
        pieces: Sequence[tuple[tuple[int, int], float, Symbol]],
        real: bool = False,
    ) -> "PatchField":
        """Sample patches from symbols written in local coordinates.

        Each piece is ``(center_index, radius, local_symbol)``: the patch covers
        the nodes within ``radius`` (box) of ``h * center_index`` and
        ``local_symbol(zeta1, zeta2, xi1, xi2)`` receives both the local offsets
        ``zeta = xi - h * center_index`` (exact) and the global coordinates.
        """
        patches = []
        shape = None
        for (c1, c2), radius, sym in pieces:
            r = int(math.ceil(radius / h)) + 1
            k = np.arange(-r, r + 1)
            z1, z2 = np.meshgrid(h * k, h * k, indexing="ij")
            g1, g2 = np.meshgrid(h * (c1 + k), h * (c2 + k), indexing="ij")
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.asarray(sym(z1, z2, g1, g2), dtype=complex)
            if not np.all(np.isfinite(vals)):
                raise SymbolError("patch symbol is not finite")
            shape = vals.shape[:-2] if shape is None else shape
            if vals.shape[:-2] != shape:
                raise GridError("patches have inconsistent component shapes")
            patches.append(Patch((c1 - r, c2 - r), vals))
        return cls(float(h), tuple(patches), real, shape or ())

    @property
    def rank(self) -> int:
        return len(self.component_shape)

    def component(self, *idx: int) -> "PatchField":
        return PatchField(self.h, tuple(Patch(p.origin, p.values[idx]) for p in self.patches), self.real,
                          self.component_shape[len(idx):])

    def map_values(self, fn: Callable[[Patch], np.ndarray], shape: tuple[int, ...], real: bool | None = None):
        return PatchField(self.h, tuple(Patch(p.origin, fn(p)) for p in self.patches),
                          self.real if real is None else real, shape)

    def scaled(self, c: float) -> "PatchField":
        return self.map_values(lambda p: c * p.values, self.component_shape)

    def __add__(self, other: "PatchField") -> "PatchField":
        if other.h != self.h or other.component_shape != self.component_shape:
            raise GridError("cannot add patch fields on different lattices or ranks")
        return PatchField(self.h, self.patches + other.patches, self.real and other.real, self.component_shape)

    def coords(self, patch: Patch) -> tuple[np.ndarray, np.ndarray]:
        n1, n2 = patch.shape
        k1 = patch.origin[0] + np.arange(n1)
        k2 = patch.origin[1] + np.arange(n2)
        return np.meshgrid(self.h * k1, self.h * k2, indexing="ij")

    def max_abs(self) -> float:
        return max(float(_modulus(p.values).max()) for p in self.patches) if self.patches else 0.0

    def support_radius(self, tol: float = SUPPORT_TOL) -> float:
        top = self.max_abs()
        if top == 0:
            return 0.0
        best = 0.0
        for p in self.patches:
            mod = _modulus(p.values)
            if mod.max() > tol * top:
                x1, x2 = self.coords(p)
                best = max(best, float(np.hypot(x1, x2)[mod > tol * top].max()))
        return best

    def active_nodes(self, tol: float = SUPPORT_TOL) -> tuple[np.ndarray, np.ndarray]:
        """Global indices ``(A, 2)`` and values ``(A,)`` of the nodes above ``tol * max``.

        Only defined for scalar fields; call :meth:`component` first otherwise.
        Entries with equal index in overlapping patches are kept separately,
        which is harmless for convolution sums.
        """
        if self.rank:
            raise GridError("active_nodes needs a scalar patch field")
        top = self.max_abs()
        idx, vals = [], []
        for p in self.patches:
            mask = np.abs(p.values) > tol * top if top > 0 else np.zeros(p.shape, bool)
            i1, i2 = np.nonzero(mask)
            idx.append(np.stack([i1 + p.origin[0], i2 + p.origin[1]], axis=1))
            vals.append(p.values[mask])
        if not idx:
            return np.zeros((0, 2), np.int64), np.zeros(0, complex)
        return np.concatenate(idx).astype(np.int64), np.concatenate(vals).astype(complex)

    def to_field(self, grid: FrequencyGrid) -> SpectralField:
        """Densify onto ``grid`` (same spacing); patches must fit inside it."""
        if not math.isclose(grid.h, self.h, rel_tol=0, abs_tol=0):
            raise GridError("grid spacing differs from the patch lattice")
        out = np.zeros(self.component_shape + (grid.K, grid.K), dtype=complex)
        o = grid.origin_index
        for p in self.patches:
            a1, a2 = p.origin[0] - o, p.origin[1] - o
            n1, n2 = p.shape
            if a1 < 0 or a2 < 0 or a1 + n1 > grid.K or a2 + n2 > grid.K:
                raise AliasingError(f"patch at global index {p.origin} does not fit in {grid}")
            out[..., a1 : a1 + n1, a2 : a2 + n2] += p.values
        return SpectralField(grid, out, self.real)


def as_patches(f: SpectralField | PatchField) -> PatchField:
    return f if isinstance(f, PatchField) else PatchField.from_field(f)


def _lattice_h(*fields) -> float:
    hs = {f.h if isinstance(f, (PatchField, FrequencyGrid)) else f.grid.h for f in fields}
    if len(hs) != 1:
        raise GridError(f"fields live on different lattices: {sorted(hs)}")
    return hs.pop()


def windowed_convolution(
    f: SpectralField | PatchField,
    g: SpectralField | PatchField,
    window: FrequencyGrid,
    method: str = "direct",
    budget: int = ACTIVE_NODE_BUDGET,
) -> SpectralField:
    """``(2 pi)^-2 (f^ * g^)`` at the nodes of ``window`` only.

    The window must share the lattice spacing of the operands. With
    ``method="direct"`` the lattice sum ``h^2 sum_eta f^(eta) g^(xi - eta)`` is
    accumulated over the active nodes of ``f`` (compiled kernel when
    available). ``method="fft"`` evaluates the same sum patch pair by patch
    pair with FFT convolutions, skipping pairs that cannot reach the window.
    """
    h = _lattice_h(f, g, window)
    fs, gs = as_patches(f), as_patches(g)
    shape = fs.component_shape or gs.component_shape
    if fs.rank and gs.rank and fs.component_shape != gs.component_shape:
        raise GridError("windowed_convolution needs equal component shapes or a scalar operand")
    out = np.zeros(shape + (window.K, window.K), dtype=complex)
    wo = window.origin_index
    scale = (h / (2 * math.pi)) ** 2
    for idx in np.ndindex(*shape) if shape else [()]:
        fi = fs.component(*idx) if fs.rank else fs
        gi = gs.component(*idx) if gs.rank else gs
        target = out[idx] if shape else out
        if method == "direct":
            nodes, vals = fi.active_nodes()
            if len(vals) > budget:
                raise BudgetError(f"{len(vals)} active nodes exceed the budget of {budget}")
            for q in gi.patches:
                offset = np.array([wo - q.origin[0], wo - q.origin[1]], dtype=np.int64)
                _kernels.lattice_accumulate(target, vals, nodes, np.ascontiguousarray(q.values), offset)
        elif method == "fft":
            _fft_window_accumulate(target, fi, gi, wo, window.K)
        else:
            raise ValueError(f"unknown method {method!r}")
    out *= scale
    real = fs.real and gs.real
    if real:
        # separate pair products cancel at low frequency; drop their asymmetric round-off
        sym = 0.5 * (out + hermitian_reflect(out))
        out[..., 1:, 1:] = sym[..., 1:, 1:]
        return SpectralField.trusted(window, out, True)
    return SpectralField(window, out, False)


def _fft_window_accumulate(target: np.ndarray, f: PatchField, g: PatchField, wo: int, K: int) -> None:
    for p in f.patches:
        for q in g.patches:
            o1, o2 = p.origin[0] + q.origin[0], p.origin[1] + q.origin[1]
            n1 = p.shape[0] + q.shape[0] - 1
            n2 = p.shape[1] + q.shape[1] - 1
            lo1, hi1 = max(o1, wo), min(o1 + n1, wo + K)
            lo2, hi2 = max(o2, wo), min(o2 + n2, wo + K)
            if lo1 >= hi1 or lo2 >= hi2:
                continue
            if not (np.any(p.values) and np.any(q.values)):
                continue
            conv = fftconvolve(p.values, q.values)
            target[lo1 - wo : hi1 - wo, lo2 - wo : hi2 - wo] += conv[lo1 - o1 : hi1 - o1, lo2 - o2 : hi2 - o2]


def pair_window_radius(f: SpectralField | PatchField, g: SpectralField | PatchField, window: FrequencyGrid) -> float:
    """Half extent of a centred box holding every patch-pair product that meets ``window``.

    Returns 0 when no pair product reaches the window.
    """
    h = _lattice_h(f, g, window)
    fs, gs = as_patches(f), as_patches(g)
    wo, we = window.origin_index, window.origin_index + window.K - 1
    best = 0
    for p in fs.patches:
        for q in gs.patches:
            o1, o2 = p.origin[0] + q.origin[0], p.origin[1] + q.origin[1]
            e1 = o1 + p.shape[0] + q.shape[0] - 2
            e2 = o2 + p.shape[1] + q.shape[1] - 2
            if o1 > we or e1 < wo or o2 > we or e2 < wo:
                continue
            best = max(best, abs(o1), abs(e1) + 1, abs(o2), abs(e2) + 1)
    return h * best


# --------------------------------------------------------------------------- resampling


def block_grid(j: int, K_b: int = 512, scale: int = 64) -> FrequencyGrid:
    """Grid adapted to dyadic block ``j``: spacing ``2^j / scale``, ``K_b`` nodes per axis."""
    return make_grid(math.ldexp(1.0, j) / scale, K_b)


def trig_interpolate(f: SpectralField, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """Evaluate the transform of ``to_physical(f)`` at the tensor nodes ``t1 x t2``.

    This is the band-limited (trigonometric) interpolant of the lattice samples.
    Nodes outside the source box are returned as zero, the source being
    band-limited well inside it.
    """
    check_band_limited(f)
    g = f.grid
    phys = (g.h * g.K / (2 * math.pi)) ** 2 * _centered_ifft(f.values)
    x = g.x
    e1 = np.exp(-1j * np.outer(t1, x))
    e2 = np.exp(-1j * np.outer(t2, x))
    comps = phys.reshape(-1, g.K, g.K)
    out = np.einsum("am,cmn,bn->cab", e1, comps, e2, optimize=True) * g.dx**2
    out = out.reshape(f.values.shape[:-2] + (len(t1), len(t2)))
    box = g.half_extent - g.h
    out[..., np.abs(t1) > box, :] = 0
    out[..., :, np.abs(t2) > box] = 0
    return out


def resample(f_spec, grid: FrequencyGrid, real: bool | None = None, radius: float | None = None) -> SpectralField:
    """Bring a closed-form symbol, a :class:`SpectralField` or a lazy source onto ``grid``.

    Symbols are evaluated exactly; fields are trigonometrically interpolated;
    objects with an ``on_grid`` method are asked directly. With ``radius`` set,
    interpolated values are only computed in the box ``|xi_i| <= radius`` and
    left zero outside (for callers that cut off beyond it anyway).
    """
    if hasattr(f_spec, "on_grid"):
        return f_spec.on_grid(grid, radius)
    if isinstance(f_spec, SpectralField):
        if f_spec.grid == grid:
            return f_spec
        xi = grid.xi
        sel = np.ones(grid.K, bool) if radius is None else np.abs(xi) <= radius
        vals = np.zeros(f_spec.values.shape[:-2] + (grid.K, grid.K), dtype=complex)
        idx = np.flatnonzero(sel)
        if idx.size:
            lo, hi = idx[0], idx[-1] + 1
            vals[..., lo:hi, lo:hi] = trig_interpolate(f_spec, xi[lo:hi], xi[lo:hi])
        is_real = f_spec.real if real is None else real
        if is_real:
            vals = 0.5 * (vals + hermitian_reflect(vals))
        return SpectralField.trusted(grid, vals, is_real)
    if callable(f_spec):
        return sample_symbol(grid, f_spec, bool(real))
    raise TypeError(f"cannot resample object of type {type(f_spec).__name__}")


def resample_to_block(f_spec, j: int, K_b: int = 512, scale: int = 64) -> SpectralField:
    """Represent ``f_spec`` on the grid adapted to dyadic block ``j``.

    Interpolating a field requires the block annulus ``{2^(j-1) <= |xi| <= 2^(j+1)}``
    to start inside the source grid; otherwise there is nothing to interpolate.
    """
    grid = block_grid(j, K_b, scale)
    if isinstance(f_spec, SpectralField) and math.ldexp(1.0, j - 1) >= f_spec.grid.half_extent:
        raise GridError(
            f"block {j} annulus starts at {math.ldexp(1.0, j - 1):.6g}, beyond source extent {f_spec.grid.half_extent:.6g}"
        )
    return resample(f_spec, grid)
