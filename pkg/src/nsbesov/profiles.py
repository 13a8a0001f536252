"""Radial quadratures for the cutoff profile, independent of any 2D grid.

For a radial symbol ``psi^(xi) = theta(|xi|)`` the inverse transform is the Hankel
transform ``psi(r) = (2 pi)^-1 int_0^2 theta(s) J0(r s) s ds``.  These routines
serve as oracles for the grid-based machinery.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .multipliers import smooth_step


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def composite_gauss(a: float, b: float, panels: int, order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = _gauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def psi_profile(r) -> np.ndarray:
    """``psi(r)`` from ``(2 pi)^-1 [J1(r)/r + int_1^2 theta(s) J0(r s) s ds]``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    s, w = composite_gauss(1.0, 2.0, 64)
    ws = w * smooth_step(s) * s
    inner = np.empty_like(r)
    for start in range(0, len(r), 2048):
        chunk = r[start : start + 2048]
        inner[start : start + 2048] = special.j0(np.outer(chunk, s)) @ ws
    with np.errstate(invalid="ignore", divide="ignore"):
        core = np.where(r > 0, special.j1(r) / np.where(r > 0, r, 1.0), 0.5)
    return (core + inner) / (2 * math.pi)


def psi_center() -> float:
    """``psi(0) = (2 pi)^-2 int psi^ = (2 pi)^-1 [1/2 + int_1^2 theta(s) s ds]``."""
    s, w = composite_gauss(1.0, 2.0, 64)
    return float((0.5 + np.sum(w * smooth_step(s) * s)) / (2 * math.pi))


def psi_l2_squared() -> float:
    """``||psi||_2^2 = (2 pi)^-1 int_0^2 theta(s)^2 s ds``, the value of ``FT(psi^2)`` at 0."""
    s, w = composite_gauss(1.0, 2.0, 64)
    return float((0.5 + np.sum(w * smooth_step(s) ** 2 * s)) / (2 * math.pi))


def psi_h1_squared() -> float:
    """``||grad psi||_2^2 = (2 pi)^-1 int_0^2 theta(s)^2 s^3 ds``."""
    s, w = composite_gauss(1.0, 2.0, 64)
    return float((0.25 + np.sum(w * smooth_step(s) ** 2 * s**3)) / (2 * math.pi))


@lru_cache(maxsize=4)
def _radial_table(r_max: float, panels: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r, w = composite_gauss(0.0, r_max, panels)
    return r, w, psi_profile(r)


@lru_cache(maxsize=4)
def _sign_intervals(r_max: float, step: float = 0.05) -> tuple[float, ...]:
    """Breakpoints at the zeros of ``psi`` on ``[0, r_max]`` (bracketed on a fine scan)."""
    r = np.arange(0.0, r_max + step / 2, step)
    v = psi_profile(r)
    cuts = [0.0]
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        cuts.append(optimize.brentq(lambda t: psi_profile(t)[0], r[i], r[i + 1], xtol=1e-14))
    cuts.append(float(r_max))
    return tuple(cuts)


def psi_lp_norm(p: float, r_max: float = 300.0, order: int = 20) -> float:
    """``||psi||_p`` by radial quadrature (``p = inf`` gives ``psi(0)``).

    ``|psi|^p`` is not smooth where ``psi`` changes sign, so the integral is split
    at the zeros of ``psi`` and each piece gets its own Gauss rule.
    """
    if math.isinf(p):
        return psi_center()
    cuts = _sign_intervals(float(r_max))
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        x, w = composite_gauss(a, b, max(1, int(math.ceil(b - a))), order)
        total += float(np.sum(w * x * np.abs(psi_profile(x)) ** p))
    return (2 * math.pi * total) ** (1 / p)


def w_hat(rho, r_max: float = 300.0, panels: int = 600) -> np.ndarray:
    """``FT(psi^2)(rho) = 2 pi int_0^inf psi(s)^2 J0(rho s) s ds`` (radial)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    r, w, v = _radial_table(r_max, panels)
    return 2 * math.pi * special.j0(np.outer(rho, r)) @ (w * v**2 * r)
