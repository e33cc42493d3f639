"""Half-space operators on the torus-times-panels grid.

Every operator works frequency by frequency in ``x'`` and exactly (through
:class:`~ellparab.ode_core.ExponentialSolution` kernels or Green-kernel
sweeps) in ``x_n``.  The operators defined by full ``n``-dimensional Fourier
division (``resolvent_A2``, ``parametrix_A1``) act on a periodic
:class:`~ellparab.grids.BoxGrid`.

Zero tangential mode: at ``xi' = 0`` the elliptic ODE degenerates, so
homogeneous solves require mean-zero boundary data and full solves remove
the mean of the data and report what was removed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .green import Convolution, convolve, green_kernel
from .grids import BoxGrid, GridField, GridSpec
from .ode_core import (ExponentialSolution, basic_solutions, combine, coupling_set,
                       fundamental_solution, solve_ode_transmission)
from .symbols import Covariable, ProblemSpec, SectorError, char_poly, compute_roots, symbol_grid


class ZeroModeError(ValueError):
    """Boundary data with a non-vanishing tangential mean."""


# ---------------------------------------------------------------------------
# modal (per-frequency exact) fields


class ModalField:
    """Half-space field held as one exponential sum per tangential mode and component."""

    def __init__(self, grid: GridSpec, components: int, modes: dict[tuple, list[ExponentialSolution]]):
        self.grid = grid
        self.components = components
        self.modes = modes
        self._cache: dict = {}

    def _assemble(self, fn) -> np.ndarray:
        g = self.grid
        hat = np.zeros((self.components,) + g.tangential_shape + (g.nx,), dtype=complex)
        for idx, sols in self.modes.items():
            for c, s in enumerate(sols):
                hat[(c,) + idx] = fn(s)
        return np.fft.ifftn(hat, axes=tuple(range(1, 1 + g.d)), norm="forward")

    def sample(self, k: int = 0) -> np.ndarray:
        """Samples of ``d^k/dx_n^k``."""
        key = ("dx", k)
        if key not in self._cache:
            x = self.grid.xn_nodes
            self._cache[key] = self._assemble(lambda s: s.dx(k)(x))
        return self._cache[key]

    def trace(self, k: int = 0) -> np.ndarray:
        g = self.grid
        hat = np.zeros((self.components,) + g.tangential_shape, dtype=complex)
        for idx, sols in self.modes.items():
            for c, s in enumerate(sols):
                hat[(c,) + idx] = complex(np.sum(s.dx(k).coef[:, 0]))
        return np.fft.ifftn(hat, axes=tuple(range(1, 1 + g.d)), norm="forward")

    def field(self) -> GridField:
        return GridField(self.sample(0), self.grid, False, self.sample, self.trace)


def _active_modes(hat: np.ndarray, grid: GridSpec, rel_tol: float = 0.0) -> list[tuple]:
    """Nonzero tangential modes carrying data (``hat`` has components first)."""
    mag = np.abs(hat)
    mag = mag.max(axis=0) if hat.ndim == 1 + grid.d else mag.max(axis=(0, -1))
    thresh = rel_tol * float(mag.max()) if mag.size else 0.0
    zero = (0,) * grid.d
    return [idx for idx in np.ndindex(*grid.tangential_shape) if idx != zero and mag[idx] > thresh]


def _cov(grid: GridSpec, idx: tuple, q: complex) -> Covariable:
    return Covariable(grid.xi_grid()[idx], q)


def _zero_mode_check(hat: np.ndarray, grid: GridSpec, tol: float, what: str) -> None:
    zero = (slice(None),) + (0,) * grid.d
    scale = max(float(np.max(np.abs(hat))), 1e-300)
    bad = float(np.max(np.abs(hat[zero])))
    if bad > tol * scale:
        raise ZeroModeError(f"{what}: zero tangential mode {bad:.3g} does not vanish "
                            f"(relative {bad / scale:.3g} > {tol:g}); subtract the mean first")


def _stack(fields: list[GridField]) -> GridField:
    grid = fields[0].grid
    data = np.concatenate([f.data for f in fields])
    nd = tr = None
    if all(f.normal_derivative or f.normal_trace for f in fields):
        nd = (lambda k, fs=fields: np.concatenate([f.dn(k) for f in fs]))
        tr = (lambda k, fs=fields: np.concatenate([f.trace(k) for f in fs]))
    return GridField(data, grid, False, nd, tr)


# ---------------------------------------------------------------------------
# homogeneous problem


def fundamental_at(spec: ProblemSpec, cov: Covariable):
    Y = basic_solutions(spec, cov)
    return fundamental_solution(Y, coupling_set(Y, cov))


def homogeneous_modal(spec: ProblemSpec, q: complex, ghat: np.ndarray, grid: GridSpec) -> ModalField:
    """``u^(xi', .) = omega(xi', ., q) g^(xi')`` on every active nonzero mode."""
    modes = {}
    for idx in _active_modes(ghat, grid):
        om = fundamental_at(spec, _cov(grid, idx, q))
        gj = ghat[(slice(None),) + idx]
        modes[idx] = [combine(om[0], gj), combine(om[1], gj)]
    return ModalField(grid, 2, modes)


def solve_homogeneous(spec: ProblemSpec, q: complex, g: GridField, zero_tol: float = 1e-12) -> GridField:
    """Solve ``A(D, q) u = 0``, ``B(D_n) u = g`` on the half-space.

    ``g`` is a boundary field with ``2m`` components.  The returned field has
    exact normal derivatives and traces.
    """
    if not g.boundary or g.components != 2 * spec.m:
        raise ValueError(f"need a boundary field with {2 * spec.m} components")
    ghat = g.hat()
    _zero_mode_check(ghat, g.grid, zero_tol, "solve_homogeneous")
    return homogeneous_modal(spec, q, ghat, g.grid).field()


def transmission_traces(spec: ProblemSpec, u: GridField) -> np.ndarray:
    """``B(D_n) u`` at ``x_n = 0`` as a boundary array with ``2m`` components."""
    rows = []
    for j in range(1, 2 * spec.m + 1):
        t = u.trace(j - 1) * (-1j) ** (j - 1)
        rows.append(t[0] + (-1) ** j * t[1])
    return np.array(rows)


# ---------------------------------------------------------------------------
# Volevich representation and the one-sided Hilbert transform


def volevich_T(which: Literal["T1", "T2"], spec: ProblemSpec, q: complex, phi: GridField) -> GridField:
    """``T1 phi = -int_0^inf F'^-1[(d_n Y)(x_n + y_n) Psi] F' phi(y_n) dy_n``; ``T2`` drops ``d_n``.

    The kernel is evaluated exactly at ``x_n + y_n``; the ``y_n`` integral uses
    the grid quadrature.
    """
    if which not in ("T1", "T2"):
        raise ValueError("which must be 'T1' or 'T2'")
    if phi.boundary or phi.components != 2 * spec.m:
        raise ValueError(f"need a half-space field with {2 * spec.m} components")
    g = phi.grid
    x, w = g.xn_nodes, g.weights
    z = (x[:, None] + x[None, :]).ravel()
    hat_phi = phi.hat()
    out = np.zeros((2,) + g.tangential_shape + (g.nx,), dtype=complex)
    for idx in _active_modes(hat_phi, g):
        cov = _cov(g, idx, q)
        Y = basic_solutions(spec, cov)
        psi = coupling_set(Y, cov).psi
        K = np.einsum("ijz,jk->ikz", Y.matrix(z, dx=1 if which == "T1" else 0), psi)
        K = K.reshape(2, 2 * spec.m, g.nx, g.nx)
        ph = hat_phi[(slice(None),) + idx]  # (2m, ny)
        out[(slice(None),) + idx] = -np.einsum("ikxy,ky,y->ix", K, ph, w)
    return GridField.from_hat(out, g)


def hilbert_one_sided(phi, nodes, weights, at=None) -> np.ndarray:
    """``(H phi)(x) = int_0^inf phi(y) / (x + y) dy`` by the given quadrature.

    ``phi`` holds samples on ``nodes`` along its last axis; ``at`` defaults to
    the nodes themselves.
    """
    nodes = np.asarray(nodes, dtype=float)
    at = nodes if at is None else np.atleast_1d(np.asarray(at, dtype=float))
    if np.any(at <= 0) or np.any(nodes <= 0):
        raise ValueError("evaluation points and nodes must be positive")
    K = 1.0 / (at[:, None] + nodes[None, :])
    return (np.asarray(phi) * np.asarray(weights)) @ K.T


# ---------------------------------------------------------------------------
# extensions


def hestenes_coefficients(order: int) -> np.ndarray:
    """``c_1..c_{K+1}`` with ``sum_k c_k (-1/k)^j = 1`` for ``j = 0..K``."""
    K = int(order)
    k = np.arange(1, K + 2, dtype=float)
    V = (-1.0 / k)[None, :] ** np.arange(K + 1)[:, None]
    return np.linalg.solve(V, np.ones(K + 1))


def extension_matrix(grid: GridSpec, targets, order: int) -> np.ndarray:
    """Rows map node samples to the extension evaluated at ``targets``.

    For ``t < 0`` the value is ``sum_k c_k u(-t / k)``; nonnegative targets that
    coincide with nodes copy the sample, other targets interpolate.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    x = grid.xn_nodes
    c = hestenes_coefficients(order)
    E = np.zeros((len(targets), len(x)))
    pos = targets >= 0
    if np.any(pos):
        tp = targets[pos]
        hit = np.isin(tp, x)
        rows = np.where(pos)[0]
        for r, t, h in zip(rows, tp, hit):
            if h:
                E[r, np.searchsorted(x, t)] = 1.0
            else:
                E[r] = grid.interpolation_matrix([t])[0]
    neg = np.where(~pos)[0]
    for k, ck in enumerate(c, start=1):
        if len(neg):
            E[neg] += ck * grid.interpolation_matrix(-targets[neg] / k)
    return E


def extend_total(u: GridField, order: int, targets=None) -> tuple[np.ndarray, np.ndarray]:
    """Hestenes reflection of a half-space field across ``x_n = 0``.

    Returns ``(targets, samples)``; by default the targets are the mirrored
    nodes followed by the nodes, so restriction to ``x_n > 0`` is exact.
    """
    x = u.grid.xn_nodes
    if targets is None:
        targets = np.concatenate([-x[::-1], x])
    targets = np.asarray(targets, dtype=float)
    E = extension_matrix(u.grid, targets, order)
    return targets, u.data @ E.T


@dataclass
class BoxField:
    data: np.ndarray
    box: BoxGrid

    def hat(self) -> np.ndarray:
        return self.box.fft(self.data)

    @classmethod
    def from_hat(cls, hat: np.ndarray, box: BoxGrid) -> "BoxField":
        return cls(box.ifft(hat), box)


def extend_to_box(u: GridField, box: BoxGrid, order: int) -> BoxField:
    if (box.N, box.L, box.n) != (u.grid.N, u.grid.L, u.grid.n):
        raise ValueError("box and half-space grid must share the tangential torus")
    _, data = extend_total(u, order, box.xn_nodes)
    return BoxField(data, box)


def restrict(f: BoxField, grid: GridSpec) -> GridField:
    """``r_+``: trigonometric interpolation of a box field onto the half-space nodes."""
    box = f.box
    x = grid.xn_nodes

    def dn(k):
        return box.evaluate_normal(f.data, x, k)

    def tr(k):
        return box.evaluate_normal(f.data, [0.0], k)[..., 0]

    return GridField(dn(0), grid, False, dn, tr)


def extend_boundary(g: GridField, q: complex, parameter_dependent: bool = True) -> GridField:
    """``E_q g``: ``(xi', x_n) -> exp(-(|xi'| + |q|) x_n) g^(xi')`` (``|q| -> 1`` for ``E_1``)."""
    if not g.boundary:
        raise ValueError("extend_boundary needs a boundary field")
    grid = g.grid
    rho = np.linalg.norm(grid.xi_grid(), axis=-1) + (abs(q) if parameter_dependent else 1.0)
    ghat = g.hat()
    x = grid.xn_nodes
    axes = tuple(range(1, 1 + grid.d))

    def dn(k):
        hat = ghat[..., None] * ((-rho) ** k)[None, ..., None] * np.exp(-rho[..., None] * x)[None]
        return np.fft.ifftn(hat, axes=axes, norm="forward")

    def tr(k):
        return np.fft.ifftn(ghat * ((-rho) ** k)[None], axes=axes, norm="forward")

    return GridField(dn(0), grid, False, dn, tr)


# ---------------------------------------------------------------------------
# whole-space operators on the box


def smoothstep_cutoff(r: np.ndarray) -> np.ndarray:
    """``psi``: 0 for ``r <= 1``, 1 for ``r >= 2``, quintic smoothstep between."""
    t = np.clip(np.asarray(r, dtype=float) - 1.0, 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t**2)


def box_symbol(spec: ProblemSpec, which: Literal["A1", "A2"], box: BoxGrid, q: complex = 0j) -> np.ndarray:
    """Symbol on the box wavenumbers; ``A2`` is the reflected (half-space) symbol."""
    return symbol_grid(spec, which, box.wavenumbers(), q, reflect=(which == "A2"))


def apply_symbol(spec: ProblemSpec, which: Literal["A1", "A2"], f: BoxField, q: complex = 0j) -> BoxField:
    return BoxField.from_hat(f.hat() * box_symbol(spec, which, f.box, q)[None], f.box)


def resolvent_A2(spec: ProblemSpec, q: complex, f: BoxField) -> BoxField:
    """Fourier division by ``A2(xi, q)`` on the whole box."""
    if q == 0:
        raise SectorError("resolvent_A2 needs q != 0")
    sym = box_symbol(spec, "A2", f.box, q)
    return BoxField.from_hat(f.hat() / sym[None], f.box)


def parametrix_A1(spec: ProblemSpec, f: BoxField, u1: BoxField,
                  cutoff: Callable[[np.ndarray], np.ndarray] = smoothstep_cutoff) -> BoxField:
    """``(1 - psi)(D) u1 + R1(D) f`` with ``R1 = psi / A1``."""
    box = f.box
    ks = np.meshgrid(*box.wavenumbers(), indexing="ij")
    psi = cutoff(np.sqrt(sum(k**2 for k in ks)))
    a1 = box_symbol(spec, "A1", box)
    safe = np.where(psi > 0, a1, 1.0)
    r1 = np.where(psi > 0, psi / safe, 0.0)
    return BoxField.from_hat((1 - psi)[None] * u1.hat() + r1[None] * f.hat(), box)


# ---------------------------------------------------------------------------
# full problem


@dataclass
class FullSolution:
    """Result of :func:`solve_full`.

    ``residual_interior`` and ``residual_boundary`` are ``max |A u - f|`` and
    ``max |B u - g|`` relative to the largest data sample.
    """

    u: GridField
    v: GridField
    w: GridField
    mode: str
    residual_interior: float
    residual_boundary: float
    removed_mean_f: float = 0.0
    removed_mean_g: float = 0.0
    extra: dict = field(default_factory=dict)


def _symbol_apply_samples(poly: np.ndarray, derivs: list[np.ndarray]) -> np.ndarray:
    """``P(D_n)`` from samples of ``d^k/dx^k`` (``poly`` highest degree first)."""
    deg = len(poly) - 1
    return sum(poly[deg - k] * (-1j) ** k * derivs[k] for k in range(deg + 1))


def _interior_residual(spec: ProblemSpec, q: complex, grid: GridSpec, u: GridField, f: GridField) -> float:
    """``max |A(D, q) u - f|`` using the fields' normal derivatives and spectral ``x'``."""
    d = 2 * spec.m
    uh = [u.hat(u.dn(k)) for k in range(d + 1)]
    fh = f.hat()
    res = np.zeros_like(fh)
    zero = (0,) * grid.d
    for idx in np.ndindex(*grid.tangential_shape):
        if idx == zero:
            continue
        cov = _cov(grid, idx, q)
        for c, which in enumerate(("A1", "A2")):
            poly = char_poly(spec, which, cov)
            res[(c,) + idx] = _symbol_apply_samples(poly, [h[(c,) + idx] for h in uh]) - fh[(c,) + idx]
    r = np.fft.ifftn(res, axes=tuple(range(1, 1 + grid.d)), norm="forward")
    return float(np.max(np.abs(r)))


def _remove_mean(hat: np.ndarray, grid: GridSpec) -> float:
    zero = (slice(None),) + (0,) * grid.d
    removed = float(np.max(np.abs(hat[zero]))) if hat.size else 0.0
    hat[zero] = 0
    return removed


def solve_full(spec: ProblemSpec, q: complex, f: GridField, g: GridField,
               mode: Literal["blind", "a_posteriori"] = "blind", u_known: GridField | None = None,
               box: BoxGrid | None = None, q0: float = 1.0) -> FullSolution:
    """``A(D, q) u = f``, ``B(D_n) u = g`` through ``u = v + w``.

    ``mode="blind"`` builds ``v`` from ``f`` alone: on every nonzero tangential
    mode ``v_i`` is the whole-line Green kernel of ``A_i`` convolved with the
    zero extension of ``f_i`` (``A_1`` has no real roots there, so no cutoff
    is needed).  ``mode="a_posteriori"`` follows the decomposition of a known
    solution ``u_known``: ``v1 = r+[(1 - psi) e+ u1 + R1 A1 e+ u1]``,
    ``v2 = r+ A2^-1 e+ f2`` on ``box``.  In both cases ``w`` solves the
    homogeneous problem with data ``g - B v``.
    """
    if abs(q) < q0:
        raise ValueError(f"|q| = {abs(q):g} below q0 = {q0:g}")
    grid = f.grid
    m = spec.m
    if f.boundary or f.components != 2 or not g.boundary or g.components != 2 * m:
        raise ValueError("f needs 2 half-space components and g 2m boundary components")
    fh, gh = f.hat(), g.hat()
    mean_f, mean_g = _remove_mean(fh, grid), _remove_mean(gh, grid)
    f0 = GridField.from_hat(fh, grid)
    scale = max(float(np.max(np.abs(f0.data))), float(np.max(np.abs(GridField.from_hat(gh, grid, True).data))), 1e-300)

    if mode == "blind":
        v, bv_hat, extra = _blind_particular(spec, q, grid, fh)
    elif mode == "a_posteriori":
        if u_known is None or box is None:
            raise ValueError("a_posteriori mode needs u_known and box")
        v, extra = _a_posteriori_particular(spec, q, grid, u_known, f0, box)
        bv = transmission_traces(spec, v)
        bv_hat = np.fft.fftn(bv, axes=tuple(range(1, 1 + grid.d)), norm="forward")
        extra["mean_Bv"] = _remove_mean(bv_hat, grid)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    w = homogeneous_modal(spec, q, gh - bv_hat, grid).field()
    u = v + w
    r_int = _interior_residual(spec, q, grid, u, f0) / scale
    bu = transmission_traces(spec, u)
    g0 = GridField.from_hat(gh, grid, True).data
    r_bd = float(np.max(np.abs(bu - g0))) / scale
    return FullSolution(u, v, w, mode, r_int, r_bd, mean_f, mean_g, extra)


def _blind_particular(spec: ProblemSpec, q: complex, grid: GridSpec, fh: np.ndarray):
    d = 2 * spec.m
    shape = (2,) + grid.tangential_shape + (grid.nx,)
    dv = [np.zeros(shape, dtype=complex) for _ in range(d + 1)]
    tr = [np.zeros((2,) + grid.tangential_shape, dtype=complex) for _ in range(d)]
    for idx in _active_modes(fh, grid):
        cov = _cov(grid, idx, q)
        for c, which in enumerate(("A1", "A2")):
            scale = cov.xi_norm if which == "A1" else cov.rho
            conv: Convolution = convolve(green_kernel(char_poly(spec, which, cov), scale), grid, fh[(c,) + idx][None])
            for k in range(d + 1):
                dv[k][(c,) + idx] = conv.derivative(k, "dx")[0]
            for k in range(d):
                tr[k][(c,) + idx] = conv.trace(k, "dx")[0]
    axes = tuple(range(1, 1 + grid.d))
    phys = [np.fft.ifftn(a, axes=axes, norm="forward") for a in dv]
    ptr = [np.fft.ifftn(a, axes=axes, norm="forward") for a in tr]

    def dn(k):
        if k > d:
            raise ValueError("particular solution derivatives are held up to order 2m")
        return phys[k]

    v = GridField(phys[0], grid, False, dn, lambda k: ptr[k])
    bv_hat = np.array([(-1j) ** (j - 1) * (tr[j - 1][0] + (-1) ** j * tr[j - 1][1]) for j in range(1, d + 1)])
    return v, bv_hat, {}


def _a_posteriori_particular(spec: ProblemSpec, q: complex, grid: GridSpec, u: GridField, f: GridField, box: BoxGrid):
    order = 2 * spec.m
    e1 = extend_to_box(u.component(0), box, order)
    f1_ext = apply_symbol(spec, "A1", e1)
    v1 = restrict(parametrix_A1(spec, f1_ext, e1), grid)
    v2 = restrict(resolvent_A2(spec, q, extend_to_box(f.component(1), box, order)), grid)
    return _stack([v1, v2]), {"v1_minus_u1": float(np.max(np.abs(v1.data - u.data[0])))}


# ---------------------------------------------------------------------------
# finite-difference oracle


@dataclass
class OracleSolution:
    """Two-sided finite-difference solution at one tangential frequency.

    ``u1`` lives on ``x_pos = 0, h, .., X`` and ``u2_tilde`` on
    ``x_neg = 0, -h, .., -X`` (the parabolic side before reflection).
    """

    x_pos: np.ndarray
    u1: np.ndarray
    x_neg: np.ndarray
    u2_tilde: np.ndarray
    step: float
    X: float
    boundary_residual: float


def _companion(poly: np.ndarray) -> np.ndarray:
    """``C`` with ``D_n V = C V`` for ``V = (u, D_n u, ..., D_n^{d-1} u)`` and ``P(D_n) u = 0``."""
    poly = np.asarray(poly, dtype=complex)
    d = len(poly) - 1
    C = np.zeros((d, d), dtype=complex)
    C[np.arange(d - 1), np.arange(1, d)] = 1.0
    C[d - 1] = -poly[::-1][:d] / poly[0]
    return C


def oracle_solve(spec: ProblemSpec, cov: Covariable, h, step: float = 1e-3, X: float | None = None) -> OracleSolution:
    """Order-2 finite differences for ``A1 u1 = 0`` on ``(0, X)``, ``A2~ u2~ = 0`` on ``(-X, 0)``.

    Each side is written as the first-order system ``V' = i C V`` for the
    vector of normal derivatives and discretized with the trapezoidal box
    scheme, which keeps the banded matrix well conditioned for ``m = 2``.
    The sides couple through ``D_n^{j-1}(u1 - u2~)(0) = h_j``; truncation
    sets the first ``m`` components to zero at ``x = +-X``.
    """
    m = spec.m
    d = 2 * m
    h = np.asarray(h, dtype=complex)
    if h.shape != (d,):
        raise ValueError(f"need {d} jump values")
    if X is None:
        s1 = compute_roots(spec, "A1", cov)
        s2 = compute_roots(spec, "A2", cov)
        delta = min(float(np.min(s1.roots_plus.imag)), float(np.min(s2.roots_plus.imag)))
        X = 25.0 / delta
    M = int(np.ceil(X / step))
    X = M * step
    n1 = M + 1
    eye = np.eye(d)
    blocks = []
    for side, poly in enumerate((char_poly(spec, "A1", cov), char_poly(spec, "A2", cov, reflect=False))):
        # walking away from 0: dx = +step on the right, -step on the left
        G = 0.5j * (step if side == 0 else -step) * _companion(poly)
        blocks.append((eye - G, -(eye + G)))
    rows, cols, vals = [], [], []
    rhs = np.zeros(2 * n1 * d, dtype=complex)
    r = 0

    def put(row, col, mat):
        ii, jj = np.nonzero(mat)
        rows.extend(row + ii)
        cols.extend(col + jj)
        vals.extend(mat[ii, jj])

    for side in (0, 1):
        nxt, cur = blocks[side]
        base = side * n1 * d
        for j in range(M):
            put(r, base + (j + 1) * d, nxt)
            put(r, base + j * d, cur)
            r += d
        put(r, base + M * d, eye[:m])
        r += m
    put(r, 0, eye)
    put(r, n1 * d, -eye)
    rhs[r:r + d] = h
    r += d
    size = 2 * n1 * d
    if r != size:
        raise RuntimeError(f"assembled {r} equations for {size} unknowns")
    A = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(size, size))
    try:
        sol = spla.spsolve(A.tocsc(), rhs)
    except RuntimeError as exc:  # pragma: no cover - reported singularity
        raise np.linalg.LinAlgError(f"oracle system singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise np.linalg.LinAlgError("oracle system singular")
    V = sol.reshape(2, n1, d)
    x = np.arange(n1) * step
    exact = solve_ode_transmission(spec, cov, h)
    bres = float(max(abs(exact.u1(X)), abs(exact.u2(X))))
    return OracleSolution(x, V[0, :, 0], -x, V[1, :, 0], step, X, bres)


def oracle_error(spec: ProblemSpec, cov: Covariable, h, step: float = 1e-3, X: float | None = None) -> float:
    """Relative max deviation between the oracle and :func:`solve_ode_transmission`."""
    o = oracle_solve(spec, cov, h, step, X)
    ex = solve_ode_transmission(spec, cov, h)
    e1 = ex.u1(o.x_pos)
    e2 = ex.u2_tilde(o.x_neg)
    scale = max(np.max(np.abs(e1)), np.max(np.abs(e2)))
    return float(max(np.max(np.abs(o.u1 - e1)), np.max(np.abs(o.u2_tilde - e2))) / scale)


# ---------------------------------------------------------------------------
# manufactured solutions


@dataclass
class Manufactured:
    u: GridField
    f: GridField
    g: GridField
    modes: dict


def manufactured_solution(spec: ProblemSpec, q: complex, grid: GridSpec, k0: int = 2, width: float = 1.5,
                          kmax: int = 5, rates=(1.5, 2.5), seed: int = 0) -> Manufactured:
    """Band-limited ``(u1, u2)`` with Gaussian-modulated mode amplitudes.

    Mode ``k`` (``1 <= |k| <= kmax`` in the first tangential direction) carries
    ``exp(-(|k| - k0)^2 / width^2)`` times a random unit phase; the normal
    profiles are ``(1 + x + x^2/2) e^{-a1 x}`` and ``(1 - x) e^{-a2 x}`` with
    rates scaled by ``2 pi / L``.  ``f = A u`` and ``g = B u`` are exact.
    """
    rng = np.random.default_rng(seed)
    base = 2 * np.pi / grid.L
    a1, a2 = rates[0] * base, rates[1] * base
    prof1 = ExponentialSolution([1j * a1], [[1.0, 1.0, 0.5]])
    prof2 = ExponentialSolution([1j * a2], [[1.0, -1.0]])
    modes_u, modes_f = {}, {}
    ghat = np.zeros((2 * spec.m,) + grid.tangential_shape, dtype=complex)
    for k in range(-kmax, kmax + 1):
        if k == 0:
            continue
        idx = (k % grid.N,) + (0,) * (grid.d - 1)
        amp = np.exp(-((abs(k) - k0) ** 2) / width**2) * np.exp(2j * np.pi * rng.random(2))
        cov = _cov(grid, idx, q)
        u1, u2 = prof1 * amp[0], prof2 * amp[1]
        modes_u[idx] = [u1, u2]
        modes_f[idx] = [u1.apply_poly(char_poly(spec, "A1", cov)), u2.apply_poly(char_poly(spec, "A2", cov))]
        for j in range(1, 2 * spec.m + 1):
            ghat[(j - 1,) + idx] = u1.at_zero(j - 1) + (-1) ** j * u2.at_zero(j - 1)
    u = ModalField(grid, 2, modes_u).field()
    f = ModalField(grid, 2, modes_f).field()
    g = GridField.from_hat(ghat, grid, True)
    return Manufactured(u, f, g, modes_u)
