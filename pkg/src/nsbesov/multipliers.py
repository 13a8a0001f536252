"""Cutoff profiles, the Littlewood-Paley family and Fourier multiplier operators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SingularityError, SymbolError
from .spectral import SUPPORT_TOL, PatchField, SpectralField, _modulus

ORIGIN_TOL = 1e-10


def _glue(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(r):
    """Smooth radial cutoff: 1 on ``[0, 1]``, 0 on ``[2, inf)``, strictly decreasing between.

    Built from ``g(t) = exp(-1/t)`` as ``g(2 - r) / (g(2 - r) + g(r - 1))``.

    >>> float(smooth_step(1.5))
    0.5
    """
    r = np.asarray(r, dtype=float)
    a = _glue(2.0 - r)
    b = _glue(r - 1.0)
    with np.errstate(invalid="ignore"):
        out = np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, a / (a + b)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Multiplier:
    """A Fourier symbol with an explicit value at the origin.

    Attributes:
        fn: callable ``(xi1, xi2) -> values``; values have shape ``xi1.shape``,
            ``(2,) + xi1.shape`` or ``(2, 2) + xi1.shape``.
        origin: value used at ``xi = 0``; ``None`` keeps whatever ``fn`` returns.
        hermitian: whether ``m(-xi) = conj(m(xi))``, so real fields stay real.
        name: label used in error messages.
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    origin: object = None
    hermitian: bool = True
    name: str = "symbol"

    def __call__(self, xi1, xi2) -> np.ndarray:
        xi1 = np.asarray(xi1, dtype=float)
        xi2 = np.asarray(xi2, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(self.fn(xi1, xi2), dtype=complex)
        shape = xi1.shape
        vals = np.array(np.broadcast_to(vals, vals.shape[: vals.ndim - len(shape)] + shape))
        if self.origin is not None:
            at0 = (xi1 == 0) & (xi2 == 0)
            if np.any(at0):
                o = np.asarray(self.origin, dtype=complex)
                vals[..., at0] = o[..., None] if o.ndim else o
        return vals


def _radius(xi1, xi2):
    return np.hypot(xi1, xi2)


def lp_block_symbol(j: int) -> Multiplier:
    """Littlewood-Paley symbol ``phi_j(xi) = theta(2^-j |xi|) - theta(2^(1-j) |xi|)``.

    Scaling by ``2^-j`` is exact in floating point, hence ``phi_j(xi) = phi_0(2^-j xi)``
    bit for bit.
    """
    j = int(j)

    def fn(xi1, xi2):
        r = _radius(xi1, xi2)
        return smooth_step(np.ldexp(r, -j)) - smooth_step(np.ldexp(r, 1 - j))

    return Multiplier(fn, origin=0.0, name=f"phi_{j}")


def psi_hat() -> Multiplier:
    """Radial cutoff ``psi^(xi) = theta(|xi|)``: equal to 1 for ``|xi| <= 1``, zero beyond 2."""
    return Multiplier(lambda a, b: smooth_step(_radius(a, b)), name="psi_hat")


def projector_symbol() -> Multiplier:
    """Helmholtz projection ``delta - xi xi^T / |xi|^2`` with the identity at the origin."""

    def fn(xi1, xi2):
        r2 = xi1**2 + xi2**2
        return np.array([[1 - xi1 * xi1 / r2, -xi1 * xi2 / r2], [-xi2 * xi1 / r2, 1 - xi2 * xi2 / r2]])

    return Multiplier(fn, origin=np.eye(2), name="projector")


def inv_laplacian_symbol() -> Multiplier:
    return Multiplier(lambda a, b: 1.0 / (a**2 + b**2), origin=0.0, name="inv_laplacian")


def laplacian_symbol() -> Multiplier:
    """Symbol ``|xi|^2`` of ``-Delta``."""
    return Multiplier(lambda a, b: a**2 + b**2, name="neg_laplacian")


def grad_perp_symbol() -> Multiplier:
    return Multiplier(lambda a, b: np.array([-1j * b, 1j * a]), name="grad_perp")


def gradient_symbol() -> Multiplier:
    return Multiplier(lambda a, b: np.array([1j * a, 1j * b]), name="gradient")


def limit_block_symbol() -> Multiplier:
    """``i zeta_2 (-zeta_1 zeta_2, zeta_1^2) / |zeta|^4``: the degree -1 symbol of
    ``(-Delta)^-1 P (0, d_2 .)``."""

    def fn(z1, z2):
        r4 = (z1**2 + z2**2) ** 2
        return np.array([1j * z2 * (-z1 * z2) / r4, 1j * z2 * z1**2 / r4])

    return Multiplier(fn, origin=np.zeros(2), name="limit_block")


def _as_multiplier(m) -> Multiplier:
    if isinstance(m, Multiplier):
        return m
    if callable(m):
        return Multiplier(m, hermitian=False, name=getattr(m, "__name__", "symbol"))
    c = complex(m)
    return Multiplier(lambda a, b: np.full(np.shape(a), c), hermitian=c.imag == 0, name="constant")


def _combine(mv: np.ndarray, fv: np.ndarray, rank_f: int) -> np.ndarray:
    rank_m = mv.ndim - 2
    if rank_m == 0:
        return mv * fv
    if rank_m == 1 and rank_f == 0:
        return mv * fv[None]
    if rank_m == 2 and rank_f == 1:
        return np.einsum("ab...,b...->a...", mv, fv)
    if rank_m == 1 and rank_f == 1:
        raise SymbolError("vector symbol on a vector field is ambiguous; use divergence()")
    raise SymbolError(f"cannot apply a rank-{rank_m} symbol to a rank-{rank_f} field")


def _guarded_values(m: Multiplier, xi1, xi2, fvals: np.ndarray, scale: float) -> np.ndarray:
    mv = m(xi1, xi2)
    bad = ~np.isfinite(mv)
    if bad.any():
        bad_nodes = bad.reshape(-1, *xi1.shape).any(axis=0)
        occupied = _modulus(fvals) > SUPPORT_TOL * scale
        if np.any(bad_nodes & occupied):
            k = tuple(np.argwhere(bad_nodes & occupied)[0])
            raise SymbolError(f"{m.name} is not finite at occupied node xi=({xi1[k]:.6g}, {xi2[k]:.6g})")
        mv = np.where(bad, 0, mv)
    return mv


def apply_multiplier(f: SpectralField | PatchField, m) -> SpectralField | PatchField:
    """Multiply ``f^`` by the symbol ``m`` node by node.

    Scalar symbols act componentwise, vector symbols map scalars to vectors and
    2x2 matrix symbols act on vectors. The real flag survives when the symbol is
    Hermitian.

    Raises:
        SymbolError: if ``m`` is not finite at a node where ``f^`` is occupied.
    """
    m = _as_multiplier(m)
    scale = f.max_abs()
    if isinstance(f, PatchField):
        patches = []
        shape = None
        for p in f.patches:
            xi1, xi2 = f.coords(p)
            out = _combine(_guarded_values(m, xi1, xi2, p.values, scale), p.values, f.rank)
            shape = out.shape[:-2]
            patches.append(type(p)(p.origin, out))
        return PatchField(f.h, tuple(patches), f.real and m.hermitian, shape if shape is not None else ())
    xi1, xi2 = f.grid.mesh()
    out = _combine(_guarded_values(m, xi1, xi2, f.values, scale), f.values, f.rank)
    return SpectralField.trusted(f.grid, out, f.real and m.hermitian)


def littlewood_paley(f, j: int):
    """``Delta_j f``."""
    return apply_multiplier(f, lp_block_symbol(j))


def helmholtz_project(u: SpectralField) -> SpectralField:
    """Leray projection onto divergence-free vector fields."""
    if u.rank != 1:
        raise SymbolError("helmholtz_project needs a vector field")
    return apply_multiplier(u, projector_symbol())


def _origin_value(f: SpectralField) -> np.ndarray:
    xi = f.grid.xi
    k = int(np.argmin(np.abs(xi)))
    if xi[k] != 0:
        return np.zeros(f.values.shape[:-2])
    return f.values[..., k, k]


def inv_laplacian(f: SpectralField, origin_tol: float = ORIGIN_TOL) -> SpectralField:
    """``(-Delta)^-1`` with symbol ``1/|xi|^2``.

    Raises:
        SingularityError: if the origin node carries more than ``origin_tol`` of the
            peak modulus; the operand should carry a derivative factor.
    """
    scale = f.max_abs()
    at0 = float(np.sqrt(np.sum(np.abs(_origin_value(f)) ** 2)))
    if scale > 0 and at0 > origin_tol * scale:
        raise SingularityError(f"field has mass {at0:.3e} at the origin (peak {scale:.3e})")
    return apply_multiplier(f, inv_laplacian_symbol())


def grad_perp(g: SpectralField | PatchField):
    """``(-d_2 g, d_1 g)``."""
    if g.rank != 0:
        raise SymbolError("grad_perp needs a scalar field")
    return apply_multiplier(g, grad_perp_symbol())


def gradient(g: SpectralField | PatchField):
    if g.rank != 0:
        raise SymbolError("gradient needs a scalar field")
    return apply_multiplier(g, gradient_symbol())


def divergence(u: SpectralField) -> SpectralField:
    """``d_1 u_1 + d_2 u_2``."""
    if u.rank != 1:
        raise SymbolError("divergence needs a vector field")
    xi1, xi2 = u.grid.mesh()
    vals = 1j * xi1 * u.values[0] + 1j * xi2 * u.values[1]
    return SpectralField.trusted(u.grid, vals, u.real)


def tensor_divergence(T: SpectralField) -> SpectralField:
    """Row-wise divergence ``(div T)_k = sum_m d_m T_mk``."""
    if T.rank != 2:
        raise SymbolError("tensor_divergence needs a 2x2 tensor field")
    xi1, xi2 = T.grid.mesh()
    vals = 1j * xi1 * T.values[0] + 1j * xi2 * T.values[1]
    return SpectralField.trusted(T.grid, vals, T.real)


def hermitian_part_ok(m: Multiplier, n: int = 7) -> bool:
    """Spot-check ``m(-xi) = conj m(xi)`` on a few random nodes."""
    rng = np.random.default_rng(0)
    xi = rng.normal(size=(2, n)) * 3
    a = m(xi[0], xi[1])
    b = m(-xi[0], -xi[1])
    return bool(np.allclose(b, np.conj(a), rtol=1e-13, atol=1e-15))


def block_annulus(j: int) -> tuple[float, float]:
    """Support annulus ``[2^(j-1), 2^(j+1)]`` of ``phi_j``."""
    return math.ldexp(1.0, j - 1), math.ldexp(1.0, j + 1)
