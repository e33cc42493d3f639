"""Whole-line Green kernels and their convolution against panel data.

For a polynomial ``P`` of degree ``d`` with no real roots, ``P(D_n) G = delta``
has the decaying solution ``G(x) = G_+(x)`` for ``x > 0`` (upper-half-plane
roots) and ``G_-(x)`` for ``x < 0`` (lower roots).  Both pieces are
exponential-polynomial sums; the matching conditions at 0 are continuity of
``D_n^j G`` for ``j < d - 1`` and a jump ``i / lead`` in ``D_n^{d-1} G``.

:func:`convolve` computes ``v(x) = int_0^X G(x - y) f(y) dy`` on a panelled
grid.  Each exponential term is swept in its stable direction; the local
integrals against the panel interpolant of ``f`` use a quadrature graded
towards the target point, so stiff kernels (``|tau| h >> 1``) are handled.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .grids import GridSpec, fornberg_weights
from .ode_core import ExponentialSolution, _confluent_entry, _solve_scaled
from .symbols import RootError, polynomial_roots


@dataclass
class GreenKernel:
    plus: ExponentialSolution
    minus: ExponentialSolution
    lead: complex
    degree: int

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.plus(np.maximum(x, 0)), self.minus(np.minimum(x, 0)))


def green_kernel(poly: np.ndarray, scale: float, cluster_tol: float = 1e-6,
                 eps_root: float = 1e-8) -> GreenKernel:
    poly = np.asarray(poly, dtype=complex)
    d = len(poly) - 1
    clusters = polynomial_roots(poly, scale, cluster_tol)
    up = [(z, k) for z, k in clusters if z.imag > eps_root * scale]
    lo = [(z, k) for z, k in clusters if z.imag < -eps_root * scale]
    if sum(k for _, k in up) + sum(k for _, k in lo) != d:
        raise RootError("Green kernel needs a symbol without real roots")
    cols = [(0, r, l) for r, (_, k) in enumerate(up) for l in range(k)]
    cols += [(1, r, l) for r, (_, k) in enumerate(lo) for l in range(k)]
    taus = [up, lo]
    V = np.array([[(1 if side == 0 else -1) * _confluent_entry(taus[side][r][0], l, j)
                   for side, r, l in cols] for j in range(d)])
    rhs = np.zeros((d, 1), dtype=complex)
    rhs[d - 1, 0] = 1j / poly[0]
    coef = _solve_scaled(V, rhs, list(range(d)), [l for _, _, l in cols], scale)[:, 0]

    def build(side):
        cl = taus[side]
        if not cl:
            return ExponentialSolution.zero([0j])
        width = max(k for _, k in cl)
        c = np.zeros((len(cl), width), dtype=complex)
        for i, (s, r, l) in enumerate(cols):
            if s == side:
                c[r, l] = coef[i]
        return ExponentialSolution(np.array([z for z, _ in cl]), c)

    return GreenKernel(build(0), build(1), complex(poly[0]), d)


# ---------------------------------------------------------------------------
# panel convolution


@lru_cache(maxsize=32)
def _graded_rule(ref_bytes: bytes, levels: int, pts: int = 16):
    """Reference quadrature for ``int_0^{t} K(t - y) l_j(y) dy`` on a unit panel.

    Targets are the panel nodes followed by the right end.  Returns ``sigma``
    (distances ``t - y``), weights and Lagrange values, shapes ``(T, Q)``,
    ``(T, Q)`` and ``(T, Q, P)``.
    """
    ref = np.frombuffer(ref_bytes, dtype=float)
    gx, gw = np.polynomial.legendre.leggauss(pts)
    gx, gw = (gx + 1) / 2, gw / 2
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1)])
    targets = np.concatenate([ref, [1.0]])
    T, Q, P = len(targets), pts * (len(edges) - 1), len(ref)
    sigma = np.zeros((T, Q))
    omega = np.zeros((T, Q))
    lag = np.zeros((T, Q, P))
    for t, tr in enumerate(targets):
        s = (edges[:-1, None] + np.diff(edges)[:, None] * gx[None, :]).ravel() * tr
        w = (np.diff(edges)[:, None] * gw[None, :]).ravel() * tr
        sigma[t], omega[t] = s, w
        for q, y in enumerate(tr - s):
            lag[t, q] = fornberg_weights(y, ref, 0)
    return sigma, omega, lag


def _sweep(breaks: np.ndarray, ref: np.ndarray, f_panels: np.ndarray, taus: np.ndarray, lmax: int):
    """Forward sweep of ``F_l(x) = int_0^x (x - y)^l e^{i tau (x - y)} f(y) dy``.

    ``f_panels`` has shape ``(C, panels, P)`` with one ``tau`` per channel
    (``Im tau > 0``).  Returns values at the panel targets, shape
    ``(C, panels, P + 1, lmax + 1)``.
    """
    h = np.diff(breaks)
    stiff = float(np.max(np.abs(taus))) * float(np.max(h)) if len(taus) else 1.0
    levels = int(max(2, np.ceil(np.log2(max(stiff, 1.0))) + 3))
    sigma, omega, lag = _graded_rule(np.ascontiguousarray(ref).tobytes(), levels)
    C = f_panels.shape[0]
    T = sigma.shape[0]
    out = np.zeros((C, len(h), T, lmax + 1), dtype=complex)
    state = np.zeros((C, lmax + 1), dtype=complex)
    tpos = np.concatenate([ref, [1.0]])
    binom = np.array([[comb(l, s) for s in range(lmax + 1)] for l in range(lmax + 1)], dtype=float)
    for p, hp in enumerate(h):
        fq = np.einsum("tqj,cj->ctq", lag, f_panels[:, p, :])
        base = np.exp(1j * taus[:, None, None] * (hp * sigma)[None]) * fq * (hp * omega)[None]
        dist = hp * tpos
        carry = np.exp(1j * taus[:, None] * dist[None, :])  # (C, T)
        for l in range(lmax + 1):
            loc = np.sum(base * (hp * sigma)[None] ** l, axis=-1)
            prev = sum(binom[l, s] * dist[None, :] ** (l - s) * state[:, s, None] for s in range(l + 1))
            out[:, p, :, l] = carry * prev + loc
        state = out[:, p, T - 1, :].copy()
    return out


def _node_values(grid: GridSpec, vals: np.ndarray) -> np.ndarray:
    """Collapse panel-target values ``(C, panels, P+1, ...)`` onto the grid nodes."""
    if grid.rule == "trapezoid":
        return np.concatenate([vals[:, :, 0], vals[:, -1:, 2]], axis=1)
    P = grid.order
    return vals[:, :, :P].reshape((vals.shape[0], -1) + vals.shape[3:])


@dataclass
class Convolution:
    """Sweep results for one kernel applied to ``C`` data channels.

    ``forward[c, r]`` holds ``F_l`` for the ``r``-th upper term at the nodes,
    shape ``(nx, lmax+1)``; ``backward`` the same for lower terms, already
    mapped back to ``x`` (including the ``(-1)^l`` factor).  ``backward0``
    holds the backward values at ``x = 0``.
    """

    kernel: GreenKernel
    forward: np.ndarray
    backward: np.ndarray
    backward0: np.ndarray
    f: np.ndarray

    def derivative(self, k: int = 0, kind: str = "dn") -> np.ndarray:
        """``D_n^k v`` (``kind="dn"``) or ``d^k v/dx^k`` (``kind="dx"``) at the nodes, ``(C, nx)``."""
        op = (lambda s: s.dn(k)) if kind == "dn" else (lambda s: s.dx(k))
        cp, cm = op(self.kernel.plus).coef, op(self.kernel.minus).coef
        out = np.einsum("crxl,rl->cx", self.forward, cp[:, : self.forward.shape[-1]])
        out = out + np.einsum("crxl,rl->cx", self.backward, cm[:, : self.backward.shape[-1]])
        d = self.kernel.degree
        if k > d:
            raise ValueError("derivatives above the symbol order are not represented")
        if k == d:
            jump = 1.0 / self.kernel.lead
            out = out + (jump if kind == "dn" else (1j) ** d * jump) * self.f
        return out

    def trace(self, k: int = 0, kind: str = "dn") -> np.ndarray:
        """Value at ``x = 0`` for ``k < degree``; shape ``(C,)``."""
        if k >= self.kernel.degree:
            raise ValueError("trace order must be below the symbol order")
        op = (lambda s: s.dn(k)) if kind == "dn" else (lambda s: s.dx(k))
        cm = op(self.kernel.minus).coef
        return np.einsum("crl,rl->c", self.backward0, cm[:, : self.backward0.shape[-1]])


def convolve(kernel: GreenKernel, grid: GridSpec, f: np.ndarray) -> Convolution:
    """``v = int_0^X G(x - y) f(y) dy`` for each row of ``f`` (shape ``(C, nx)``)."""
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    C = f.shape[0]
    ref = grid.panel_reference()
    fp = grid.panel_values(f)
    lmax = max(kernel.plus.max_power, kernel.minus.max_power)

    def run(taus, fpanels, breaks):
        if len(taus) == 0:
            return np.zeros((C, 0, grid.nx, lmax + 1), dtype=complex), np.zeros((C, 0, lmax + 1), dtype=complex)
        ch_tau = np.repeat(taus, C)
        ch_f = np.tile(fpanels, (len(taus), 1, 1))
        vals = _sweep(breaks, ref, ch_f, ch_tau, lmax)
        nodes = _node_values(grid, vals).reshape(len(taus), C, grid.nx, lmax + 1)
        end = vals[:, -1, -1, :].reshape(len(taus), C, lmax + 1)
        return nodes.transpose(1, 0, 2, 3), end.transpose(1, 0, 2)

    fwd, _ = run(kernel.plus.taus, fp, grid.breaks)
    # backward terms: sweep the mirrored data with tau -> -tau
    fmir = grid.panel_values(f[:, ::-1])
    bwd, end = run(-kernel.minus.taus, fmir, grid.mirrored_breaks())
    signs = (-1.0) ** np.arange(lmax + 1)
    bwd = bwd[:, :, ::-1, :] * signs
    end = end * signs
    return Convolution(kernel, fwd, bwd, end, f)
