"""Per-frequency ODE objects: basic solutions, coupling matrix, fundamental solution.

At a fixed covariable ``(xi', q)`` every object here is a finite sum of
exponential-polynomial terms ``x^l exp(i tau x)`` with ``Im tau > 0``, held
exactly by :class:`ExponentialSolution`.  ``D_n`` means ``-i d/dx``.

Roots of the characteristic polynomials may be multiple (the biharmonic
symbol has ``m``-fold roots), so the basis is the confluent one
``{x^l exp(i tau x) : l < multiplicity(tau)}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Literal, Sequence

import numpy as np

from .scaling import delta1, delta2
from .symbols import Covariable, ProblemSpec, RootError, RootSplit, char_poly, compute_roots

COND_LIMIT = 1e12


class ConditioningError(np.linalg.LinAlgError):
    """A per-covariable linear system is singular beyond the conditioning limit."""


class ExponentialSolution:
    """``x -> sum_{r,l} coef[r, l] x^l exp(i taus[r] x)``.

    ``coef`` has one row per distinct root and one column per power of ``x``.
    Differentiation and polynomial operators act exactly on ``coef``.
    """

    __slots__ = ("taus", "coef")

    def __init__(self, taus, coef):
        self.taus = np.atleast_1d(np.asarray(taus, dtype=complex))
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim == 1:
            coef = coef[:, None]
        if coef.shape[0] != len(self.taus):
            raise ValueError("one coefficient row per root expected")
        self.coef = coef

    @classmethod
    def zero(cls, taus) -> "ExponentialSolution":
        taus = np.atleast_1d(np.asarray(taus, dtype=complex))
        return cls(taus, np.zeros((len(taus), 1), dtype=complex))

    @property
    def max_power(self) -> int:
        return self.coef.shape[1] - 1

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xs = x[..., None]
        poly = np.zeros(x.shape + (len(self.taus),), dtype=complex)
        for l in range(self.coef.shape[1] - 1, -1, -1):
            poly = poly * xs + self.coef[:, l]
        return np.sum(poly * np.exp(1j * self.taus * xs), axis=-1)

    def dx(self, k: int = 1) -> "ExponentialSolution":
        """``k``-th derivative ``d^k/dx^k``."""
        c = self.coef
        for _ in range(k):
            new = 1j * self.taus[:, None] * c
            new[:, :-1] += c[:, 1:] * np.arange(1, c.shape[1])
            c = new
        return ExponentialSolution(self.taus, c)

    def dn(self, k: int = 1) -> "ExponentialSolution":
        """``D_n^k = (-i d/dx)^k``."""
        out = self.dx(k)
        out.coef = out.coef * (-1j) ** k
        return out

    def at_zero(self, k: int = 0) -> complex:
        """``D_n^k`` evaluated at ``x = 0``."""
        return complex(np.sum(self.dn(k).coef[:, 0]))

    def apply_poly(self, poly: np.ndarray) -> "ExponentialSolution":
        """Apply ``P(D_n)`` with coefficients ``poly`` (highest degree first)."""
        poly = np.asarray(poly, dtype=complex)
        deg = len(poly) - 1
        out = np.zeros_like(self.coef)
        cur = self
        for j in range(deg + 1):
            out += poly[deg - j] * cur.coef
            cur = cur.dn(1)
        return ExponentialSolution(self.taus, out)

    def __add__(self, other: "ExponentialSolution") -> "ExponentialSolution":
        return combine([self, other], [1.0, 1.0])

    def __mul__(self, c: complex) -> "ExponentialSolution":
        return ExponentialSolution(self.taus, self.coef * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def decay_rate(self) -> float:
        active = np.any(self.coef != 0, axis=1)
        return float(np.min(self.taus.imag[active])) if np.any(active) else np.inf

    def coefficient_scale(self) -> float:
        return float(np.max(np.abs(self.coef))) if self.coef.size else 0.0

    def __repr__(self):
        return f"ExponentialSolution(taus={self.taus}, coef={self.coef})"


def combine(sols: Sequence[ExponentialSolution], weights) -> ExponentialSolution:
    """Linear combination; solutions may carry different root sets."""
    taus: list[complex] = []
    for s in sols:
        for t in s.taus:
            if not any(t == u for u in taus):
                taus.append(t)
    width = max(s.coef.shape[1] for s in sols)
    coef = np.zeros((len(taus), width), dtype=complex)
    for s, w in zip(sols, weights):
        for r, t in enumerate(s.taus):
            i = next(i for i, u in enumerate(taus) if u == t)
            coef[i, : s.coef.shape[1]] += w * s.coef[r]
    return ExponentialSolution(np.array(taus), coef)


# ---------------------------------------------------------------------------
# transmission trace rows


@dataclass(frozen=True)
class TransmissionRows:
    """Rows of ``B(D_n)``: row ``j`` is ``D_n^{j-1} u1 + (-1)^j D_n^{j-1} u2``."""

    m: int

    def rows(self) -> list[tuple[int, int, int]]:
        """``(derivative order, sign on u1, sign on u2)`` for ``j = 1..2m``."""
        return [(j - 1, 1, (-1) ** j) for j in range(1, 2 * self.m + 1)]

    def apply(self, u1: ExponentialSolution, u2: ExponentialSolution) -> np.ndarray:
        return np.array([s1 * u1.at_zero(d) + s2 * u2.at_zero(d) for d, s1, s2 in self.rows()])

    def block(self, which: Literal["11", "12", "21", "22"], cols: Sequence[ExponentialSolution]) -> np.ndarray:
        """One of ``B^(1,1) .. B^(2,2)`` applied to columns, evaluated at 0."""
        rows = self.rows()[: self.m] if which[0] == "1" else self.rows()[self.m:]
        side = 1 if which[1] == "1" else 2
        return np.array([[(s1 if side == 1 else s2) * c.at_zero(d) for c in cols] for d, s1, s2 in rows])


def transmission_boundary_rows(m: int) -> TransmissionRows:
    if m < 1:
        raise ValueError("m must be >= 1")
    return TransmissionRows(m)


# ---------------------------------------------------------------------------
# basic solutions


def _confluent_columns(split: RootSplit) -> list[tuple[int, int]]:
    return [(r, l) for r, (_, k) in enumerate(split.clusters_plus) for l in range(k)]


def _confluent_entry(tau: complex, l: int, d: int) -> complex:
    """``D_n^d (x^l e^{i tau x})`` at ``x = 0``."""
    if d < l:
        return 0j
    return (-1j) ** d * factorial(d) / factorial(d - l) * (1j * tau) ** (d - l)


def _solve_scaled(V: np.ndarray, B: np.ndarray, row_orders, col_powers, scale: float) -> np.ndarray:
    R = scale ** (-np.asarray(row_orders, dtype=float))
    C = scale ** np.asarray(col_powers, dtype=float)
    Vs = R[:, None] * V * C[None, :]
    cond = np.linalg.cond(Vs)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"confluent Vandermonde system has condition {cond:.3g}")
    return C[:, None] * np.linalg.solve(Vs, R[:, None] * B)


def _basic_solution(split: RootSplit, m: int, orders: list[int], signs: list[int]) -> list[ExponentialSolution]:
    if len(split.roots_plus) != m:
        raise RootError(f"expected {m} upper roots, got {len(split.roots_plus)}")
    cols = _confluent_columns(split)
    taus = np.array([z for z, _ in split.clusters_plus])
    V = np.array([[s * _confluent_entry(taus[r], l, d) for r, l in cols] for d, s in zip(orders, signs)])
    coef = _solve_scaled(V, np.eye(m, dtype=complex), orders, [l for _, l in cols], split.scale)
    width = max(k for _, k in split.clusters_plus)
    out = []
    for k in range(m):
        c = np.zeros((len(taus), width), dtype=complex)
        for i, (r, l) in enumerate(cols):
            c[r, l] = coef[i, k]
        out.append(ExponentialSolution(taus, c))
    return out


def basic_solution_Y1(split: RootSplit, m: int) -> list[ExponentialSolution]:
    """Columns of ``Y1``: ``D_n^{j-1} Y1_k |_0 = delta_jk`` for ``j = 1..m``."""
    return _basic_solution(split, m, list(range(m)), [1] * m)


def basic_solution_Y2(split: RootSplit, m: int) -> list[ExponentialSolution]:
    """Columns of ``Y2``: ``(-1)^j D_n^{j-1} Y2_k |_0 = delta_jk`` for ``j = m+1..2m``."""
    js = range(m + 1, 2 * m + 1)
    return _basic_solution(split, m, [j - 1 for j in js], [(-1) ** j for j in js])


def residue_contour(split: RootSplit, nodes: int = 256, eps_root: float = 1e-8):
    """Circle enclosing the upper roots, sampled for the trapezoid rule."""
    if nodes < 64:
        raise ValueError("contour needs at least 64 nodes")
    center = complex(np.mean(split.roots_plus))
    radius = 1.5 * float(np.max(np.abs(split.roots_plus - center))) + split.scale / 10
    theta = 2 * np.pi * np.arange(nodes) / nodes
    tau = center + radius * np.exp(1j * theta)
    all_roots = np.concatenate([split.roots_plus, split.roots_minus])
    gap = np.min(np.abs(np.abs(all_roots - center) - radius))
    if gap <= eps_root * split.scale:
        raise RootError("contour passes through a characteristic root")
    # (1/2 pi i) dtau = (1/N) * (tau - center) per node
    return tau, (tau - center) / nodes


def residue_Y(split: RootSplit, m: int, x, kind: Literal["Y1", "Y2"] = "Y1",
              contour_nodes: int = 256, return_N: bool = False):
    """Contour-integral representation of the basic solutions.

    Finds polynomials ``N_k`` (degree < m) from the moment conditions, then
    evaluates ``Y_k(x) = (1/2 pi i) \\oint N_k(tau) e^{i x tau} / A+(tau) dtau``.
    Returns an array of shape ``(m, len(x))``.
    """
    tau, w = residue_contour(split, contour_nodes)
    inv_ap = 1.0 / np.polyval(split.a_plus, tau)
    if kind == "Y1":
        orders, signs = list(range(m)), [1] * m
    else:
        js = range(m + 1, 2 * m + 1)
        orders, signs = [j - 1 for j in js], [(-1) ** j for j in js]
    # G[j, i] = (1/2 pi i) oint sign_j tau^{d_j} tau^i / A+
    G = np.array([[s * np.sum(w * tau ** (d + i) * inv_ap) for i in range(m)] for d, s in zip(orders, signs)])
    Ncoef = np.linalg.solve(G, np.eye(m))  # column k: ascending coefficients of N_k
    x = np.atleast_1d(np.asarray(x, dtype=float))
    powers = tau[None, :] ** np.arange(m)[:, None]
    Nvals = Ncoef.T @ powers  # (m, nodes)
    vals = (Nvals * (w * inv_ap)[None, :]) @ np.exp(1j * np.outer(tau, x))
    if return_N:
        return vals, Ncoef, G
    return vals


@dataclass
class BasicSolutionPair:
    Y1: list[ExponentialSolution]
    Y2: list[ExponentialSolution]
    split1: RootSplit
    split2: RootSplit
    cov: Covariable
    m: int

    def matrix(self, x, dx: int = 0) -> np.ndarray:
        """``d^dx/dx^dx Y`` as an array of shape ``(2, 2m, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((2, 2 * self.m, len(x)), dtype=complex)
        for k in range(self.m):
            out[0, k] = self.Y1[k].dx(dx)(x)
            out[1, self.m + k] = self.Y2[k].dx(dx)(x)
        return out


def basic_solutions(spec: ProblemSpec, cov: Covariable, eps_root: float = 1e-8,
                    cluster_tol: float = 1e-6) -> BasicSolutionPair:
    s1 = compute_roots(spec, "A1", cov, eps_root, cluster_tol)
    s2 = compute_roots(spec, "A2", cov, eps_root, cluster_tol)
    return BasicSolutionPair(basic_solution_Y1(s1, spec.m), basic_solution_Y2(s2, spec.m), s1, s2, cov, spec.m)


# ---------------------------------------------------------------------------
# coupling matrix


def schur_inverse(A12: np.ndarray, A21: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``[[I, A12], [A21, I]]`` through ``S = I - A21 A12``."""
    m = A12.shape[0]
    I = np.eye(m)
    S = I - A21 @ A12
    Sinv = np.linalg.inv(S)
    inv = np.block([[I + A12 @ Sinv @ A21, -A12 @ Sinv], [-Sinv @ A21, Sinv]])
    return inv, S


@dataclass
class CouplingSet:
    """Trace matrices, the coupling matrix ``Psi`` (two routes) and its scaled pieces."""

    c21_raw: np.ndarray
    c12_raw: np.ndarray
    psi: np.ndarray
    psi_schur: np.ndarray
    s: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    m2: np.ndarray
    cond: float

    @property
    def route_error(self) -> float:
        return float(np.linalg.norm(self.psi - self.psi_schur) / np.linalg.norm(self.psi))


def coupling_set(Y: BasicSolutionPair, cov: Covariable | None = None) -> CouplingSet:
    cov = Y.cov if cov is None else cov
    m = Y.m
    rows = TransmissionRows(m)
    c21 = rows.block("21", Y.Y1)
    c12 = rows.block("12", Y.Y2)
    block = np.block([[np.eye(m), c12], [c21, np.eye(m)]])
    s, rho = cov.xi_norm, cov.rho
    if s == 0:
        raise ValueError("coupling set needs xi' != 0")
    # conditioning is judged on the scale-balanced form (the M2 matrix)
    c1 = np.linalg.inv(delta1(m, rho)) @ c12 @ delta2(m, rho)
    c2 = np.linalg.inv(delta2(m, s)) @ c21 @ delta1(m, s)
    a12 = (s / rho) ** m * delta1(m, rho / s) @ c1
    a21 = delta1(m, s / rho) @ c2
    balanced = np.block([[np.eye(m), a12], [a21, np.eye(m)]])
    cond = float(np.linalg.cond(balanced))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"transmission block matrix has condition {cond:.3g} at {cov}")
    psi = np.linalg.inv(block)
    m2, S = schur_inverse(a12, a21)
    P = np.diag(np.concatenate([np.diag(delta1(m, s)), s**m * np.diag(delta1(m, rho))]))
    psi_schur = P @ m2 @ np.linalg.inv(P)
    return CouplingSet(c21, c12, psi, psi_schur, S, c1, c2, a12, a21, m2, cond)


def fundamental_solution(Y: BasicSolutionPair, cs: CouplingSet) -> list[list[ExponentialSolution]]:
    """``omega = Y Psi`` as a 2 x 2m nested list."""
    m = Y.m
    out = [[None] * (2 * m) for _ in range(2)]
    for j in range(2 * m):
        out[0][j] = combine(Y.Y1, cs.psi[:m, j])
        out[1][j] = combine(Y.Y2, cs.psi[m:, j])
    return out


def fundamental_matrix(omega, x, dx: int = 0) -> np.ndarray:
    """Samples of ``d^dx omega`` with shape ``(2, 2m, len(x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([[w.dx(dx)(x) for w in row] for row in omega])


def ode_residual(spec: ProblemSpec, Y: BasicSolutionPair) -> float:
    """Largest relative coefficient of ``A1(xi', D_n) Y1`` and ``A2(xi', D_n, q) Y2``."""
    worst = 0.0
    for which, cols in (("A1", Y.Y1), ("A2", Y.Y2)):
        poly = char_poly(spec, which, Y.cov)
        pscale = np.max(np.abs(poly))
        for c in cols:
            r = c.apply_poly(poly)
            scale = pscale * c.coefficient_scale() * max(1.0, np.max(np.abs(c.taus))) ** (2 * spec.m)
            worst = max(worst, r.coefficient_scale() / scale)
    return worst


# ---------------------------------------------------------------------------
# solvability through the Wronskian


def _stable_basis(clusters: list[tuple[complex, int]]) -> list[ExponentialSolution]:
    taus = np.array([z for z, _ in clusters])
    width = max(k for _, k in clusters)
    out = []
    for r, (_, k) in enumerate(clusters):
        for l in range(k):
            c = np.zeros((len(taus), width), dtype=complex)
            c[r, l] = 1.0
            out.append(ExponentialSolution(taus, c))
    return out


def _wronskian_bases(spec: ProblemSpec, cov: Covariable, eps_root: float = 1e-8):
    """Stable bases of the elliptic side (x > 0) and unreflected parabolic side (x < 0)."""
    s1 = compute_roots(spec, "A1", cov, eps_root)
    # unreflected A2~: its lower roots give solutions decaying as x -> -infinity
    s2 = compute_roots(spec, "A2", cov, eps_root)
    lower = [(-z, k) for z, k in s2.clusters_plus]
    return _stable_basis(s1.clusters_plus), _stable_basis(lower)


def wronskian_matrix(spec: ProblemSpec, cov: Covariable, x: float = 0.0) -> np.ndarray:
    v, w = _wronskian_bases(spec, cov)
    basis = v + w
    return np.array([[b.dn(d)(x)[()] for b in basis] for d in range(2 * spec.m)])


def wronskian_det(spec: ProblemSpec, cov: Covariable, x: float = 0.0) -> complex:
    """Determinant of ``(D_n^{i-1} b_j(x))`` for the basis ``{v_1..v_m, w_1..w_m}``."""
    return complex(np.linalg.det(wronskian_matrix(spec, cov, x)))


@dataclass
class TransmissionODESolution:
    """``u1`` on ``x > 0`` and the reflected ``u2(x) = u2~(-x)``, both decaying."""

    u1: ExponentialSolution
    u2: ExponentialSolution

    def u2_tilde(self, x_negative) -> np.ndarray:
        return self.u2(-np.asarray(x_negative, dtype=float))


def solve_ode_transmission(spec: ProblemSpec, cov: Covariable, h) -> TransmissionODESolution:
    """Solve the two half-line ODEs coupled by ``D_n^{j-1}(u1 - u2~)|_0 = h_j``.

    Uses the Wronskian system at ``x = 0`` (independent of the basic-solution
    route): ``u1 = sum alpha_j v_j``, ``u2~ = -sum beta_j w_j``.
    """
    h = np.asarray(h, dtype=complex)
    v, w = _wronskian_bases(spec, cov)
    W = np.array([[b.at_zero(d) for b in v + w] for d in range(2 * spec.m)])
    scale = cov.rho
    orders = np.arange(2 * spec.m)
    R = scale ** (-orders.astype(float))
    cond = np.linalg.cond(R[:, None] * W)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"Wronskian system has condition {cond:.3g}")
    coef = np.linalg.solve(R[:, None] * W, R * h)
    m = spec.m
    u1 = combine(v, coef[:m])
    u2t = combine(w, -coef[m:])
    # reflect: u2(x) = u2~(-x); term x^l e^{i s x} -> (-1)^l x^l e^{-i s x}
    signs = (-1.0) ** np.arange(u2t.coef.shape[1])
    u2 = ExponentialSolution(-u2t.taus, u2t.coef * signs[None, :])
    return TransmissionODESolution(u1, u2)
