"""Grids and sampled fields for the half-space ``T^{n-1} x (0, X]``.

Tangential directions live on a torus of period ``L`` with ``N`` points per
dimension.  The normal direction uses panels: composite Gauss-Legendre on a
geometric grading (spectral within each panel) or composite trapezoid on
geometrically graded nodes (second order).  A separate :class:`BoxGrid`
holds whole-space fields on a periodic box ``T^{n-1} x [-X, X)`` for
operators defined by full Fourier division.

Tangential transforms use ``norm="forward"`` so that a field
``exp(i k x')`` has coefficient exactly 1 at wavenumber ``k``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal

import numpy as np


@lru_cache(maxsize=None)
def gauss_reference(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def fornberg_weights(x0: float, xs: np.ndarray, k: int) -> np.ndarray:
    """Finite-difference weights for ``d^k/dx^k`` at ``x0`` on nodes ``xs``."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    if k >= n:
        raise ValueError(f"need more than {k} nodes for a derivative of order {k}")
    c = np.zeros((n, k + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, k)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for s in range(mn, 0, -1):
                    c[i, s] = c1 * (s * c[i - 1, s - 1] - c5 * c[i - 1, s]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for s in range(mn, 0, -1):
                c[j, s] = (c4 * c[j, s] - s * c[j, s - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, k]


def _tangential_freqs(L: float, N: int) -> np.ndarray:
    return 2 * np.pi / L * np.fft.fftfreq(N, d=1.0 / N)


@dataclass(frozen=True)
class GridSpec:
    """Tangential torus times a panelled normal grid.

    ``breaks`` are the panel endpoints ``0 = b_0 < ... < b_K = X``.  With
    ``rule="gauss"`` every panel carries ``order`` Gauss-Legendre nodes; with
    ``rule="trapezoid"`` the nodes are the breakpoints themselves (``x = 0``
    included) and the weights are composite trapezoid weights.
    """

    L: float
    N: int
    n: int
    breaks: np.ndarray
    rule: Literal["gauss", "trapezoid"] = "gauss"
    order: int = 12

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of 2, got {self.N}")
        b = np.asarray(self.breaks, dtype=float)
        if b[0] != 0 or np.any(np.diff(b) <= 0):
            raise ValueError("breaks must start at 0 and increase strictly")
        object.__setattr__(self, "breaks", b)
        if self.rule not in ("gauss", "trapezoid"):
            raise ValueError(f"unknown rule {self.rule!r}")

    # construction -------------------------------------------------------
    @classmethod
    def graded(cls, L: float = 2 * np.pi, N: int = 32, n: int = 2, X: float | None = None,
               h0: float = 1e-3, panels: int = 24, order: int = 12,
               rule: Literal["gauss", "trapezoid"] = "gauss") -> "GridSpec":
        """Geometric grading from ``h0`` up to ``X``.

        ``X`` defaults to ``40 / delta_min`` with ``delta_min = 2 pi / L``,
        the slowest decay rate of any non-constant tangential mode.
        """
        if X is None:
            X = 40.0 / (2 * np.pi / L)
        breaks = np.concatenate([[0.0], np.geomspace(h0, X, panels)])
        return cls(L, N, n, breaks, rule, order)

    def refined(self) -> "GridSpec":
        """Every normal panel split in two (the tangential grid is unchanged)."""
        b = self.breaks
        mids = (b[:-1] + b[1:]) / 2
        return GridSpec(self.L, self.N, self.n, np.sort(np.concatenate([b, mids])), self.rule, self.order)

    def with_N(self, N: int) -> "GridSpec":
        return GridSpec(self.L, N, self.n, self.breaks, self.rule, self.order)

    # normal direction ---------------------------------------------------
    @property
    def X(self) -> float:
        return float(self.breaks[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breaks)

    @property
    def panel_count(self) -> int:
        return len(self.breaks) - 1

    @property
    def xn_nodes(self) -> np.ndarray:
        if self.rule == "trapezoid":
            return self.breaks.copy()
        t, _ = gauss_reference(self.order)
        return (self.breaks[:-1, None] + self.widths[:, None] * t[None, :]).ravel()

    @property
    def weights(self) -> np.ndarray:
        if self.rule == "trapezoid":
            h = self.widths
            w = np.zeros(len(self.breaks))
            w[:-1] += h / 2
            w[1:] += h / 2
            return w
        _, wt = gauss_reference(self.order)
        return (self.widths[:, None] * wt[None, :]).ravel()

    @property
    def nx(self) -> int:
        return len(self.xn_nodes)

    def panel_values(self, f: np.ndarray) -> np.ndarray:
        """Reshape node samples (last axis) into ``(..., panels, nodes per panel)``."""
        if self.rule == "trapezoid":
            return np.stack([f[..., :-1], f[..., 1:]], axis=-1)
        return f.reshape(f.shape[:-1] + (self.panel_count, self.order))

    def panel_reference(self) -> np.ndarray:
        """Node positions within a panel, as fractions of its width."""
        if self.rule == "trapezoid":
            return np.array([0.0, 1.0])
        return gauss_reference(self.order)[0]

    def mirrored_breaks(self) -> np.ndarray:
        return (self.X - self.breaks)[::-1]

    # tangential directions ---------------------------------------------
    @property
    def d(self) -> int:
        return self.n - 1

    @property
    def tangential_shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def cell(self) -> float:
        return (self.L / self.N) ** self.d

    def freqs(self) -> np.ndarray:
        return _tangential_freqs(self.L, self.N)

    def xi_grid(self) -> np.ndarray:
        """Wavenumber vectors, shape ``tangential_shape + (n-1,)``."""
        g = np.meshgrid(*([self.freqs()] * self.d), indexing="ij")
        return np.stack(g, axis=-1)

    def tangential_points(self) -> np.ndarray:
        x = np.arange(self.N) * self.L / self.N
        g = np.meshgrid(*([x] * self.d), indexing="ij")
        return np.stack(g, axis=-1)

    def mode_indices(self):
        return list(np.ndindex(*self.tangential_shape))

    # derivatives and interpolation in x_n ------------------------------
    def normal_derivative_matrix(self, k: int) -> np.ndarray:
        """Dense ``d^k/dx_n^k`` matrix on the nodes.

        Gauss grids differentiate the panel interpolant (spectral inside a
        panel); trapezoid grids use five-point stencils (fourth order).
        """
        return _derivative_matrix(self.breaks.tobytes(), self.rule, self.order, k)

    def interpolation_matrix(self, targets) -> np.ndarray:
        """Rows evaluate the local interpolant at ``targets`` (zero beyond ``X``)."""
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        x = self.xn_nodes
        M = np.zeros((len(targets), len(x)))
        for i, t in enumerate(targets):
            if t > self.X * (1 + 1e-14):
                continue
            idx = self._stencil(t, 0)
            M[i, idx] = fornberg_weights(t, x[idx], 0)
        return M

    def _stencil(self, t: float, k: int) -> np.ndarray:
        if self.rule == "gauss":
            p = int(np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.panel_count - 1))
            return np.arange(p * self.order, (p + 1) * self.order)
        width = max(5, k + 2)
        n = len(self.breaks)
        c = int(np.searchsorted(self.breaks, t))
        lo = int(np.clip(c - width // 2, 0, n - width))
        return np.arange(lo, lo + width)


@lru_cache(maxsize=64)
def _derivative_matrix(breaks_bytes: bytes, rule: str, order: int, k: int) -> np.ndarray:
    breaks = np.frombuffer(breaks_bytes, dtype=float)
    g = GridSpec(2 * np.pi, 2, 2, breaks, rule, order)
    x = g.xn_nodes
    D = np.zeros((len(x), len(x)))
    for i, t in enumerate(x):
        idx = g._stencil(t, k)
        if rule == "trapezoid":
            # centre the five-point window on the node where possible
            n = len(x)
            lo = int(np.clip(i - 2, 0, n - max(5, k + 2)))
            idx = np.arange(lo, lo + max(5, k + 2))
        D[i, idx] = fornberg_weights(t, x[idx], k)
    D.setflags(write=False)
    return D


@dataclass(frozen=True)
class BoxGrid:
    """Periodic whole-space box ``T^{n-1} x [-X, X)`` with ``M`` uniform normal points.

    Normal nodes sit at half-integer multiples of the step so the box is
    symmetric about ``x_n = 0`` without a node on the interface.
    """

    L: float
    N: int
    n: int
    X: float
    M: int

    @classmethod
    def matching(cls, grid: GridSpec, M: int = 512, X: float | None = None) -> "BoxGrid":
        return cls(grid.L, grid.N, grid.n, grid.X if X is None else X, M)

    @property
    def step(self) -> float:
        return 2 * self.X / self.M

    @property
    def xn_nodes(self) -> np.ndarray:
        return -self.X + (np.arange(self.M) + 0.5) * self.step

    @property
    def d(self) -> int:
        return self.n - 1

    def wavenumbers(self) -> list[np.ndarray]:
        kt = _tangential_freqs(self.L, self.N)
        kn = 2 * np.pi / (2 * self.X) * np.fft.fftfreq(self.M, d=1.0 / self.M)
        return [kt] * self.d + [kn]

    def fft(self, data: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.n, 0))
        return np.fft.fftn(data, axes=axes, norm="forward")

    def ifft(self, data: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.n, 0))
        return np.fft.ifftn(data, axes=axes, norm="forward")

    def evaluate_normal(self, data: np.ndarray, targets, k: int = 0) -> np.ndarray:
        """Trigonometric interpolant in ``x_n`` (and its ``k``-th derivative) at ``targets``."""
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        kn = self.wavenumbers()[-1]
        # shift by the half-step node offset: node j sits at -X + (j + 1/2) step
        hat = np.fft.fft(data, axis=-1, norm="forward")
        phase = np.exp(1j * np.outer(kn, targets + self.X - 0.5 * self.step))
        return (hat * (1j * kn) ** k) @ phase


@dataclass
class GridField:
    """Samples of one or more scalar fields on a grid.

    ``data`` has shape ``(components,) + tangential_shape + (nx,)`` for
    half-space fields and ``(components,) + tangential_shape`` for boundary
    fields.  ``normal_derivative(k)``, when present, returns exact samples of
    ``d^k/dx_n^k`` with the same shape as ``data``; ``normal_trace(k)`` the
    exact boundary values of that derivative.
    """

    data: np.ndarray
    grid: GridSpec
    boundary: bool = False
    normal_derivative: Callable[[int], np.ndarray] | None = field(default=None, repr=False)
    normal_trace: Callable[[int], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        expect = self.grid.tangential_shape + (() if self.boundary else (self.grid.nx,))
        if self.data.ndim != len(expect) + 1 or self.data.shape[1:] != expect:
            raise ValueError(f"field shape {self.data.shape} does not match grid {expect}")

    @property
    def components(self) -> int:
        return self.data.shape[0]

    @property
    def _t_axes(self) -> tuple[int, ...]:
        return tuple(range(1, 1 + self.grid.d))

    def hat(self, data: np.ndarray | None = None) -> np.ndarray:
        """Tangential Fourier coefficients."""
        d = self.data if data is None else data
        return np.fft.fftn(d, axes=self._t_axes, norm="forward")

    @classmethod
    def from_hat(cls, hat: np.ndarray, grid: GridSpec, boundary: bool = False, **kw) -> "GridField":
        axes = tuple(range(1, 1 + grid.d))
        return cls(np.fft.ifftn(hat, axes=axes, norm="forward"), grid, boundary, **kw)

    def dn(self, k: int) -> np.ndarray:
        """Samples of ``d^k/dx_n^k`` (exact when available, otherwise numerical)."""
        if self.boundary:
            raise ValueError("boundary fields have no normal direction")
        if k == 0:
            return self.data
        if self.normal_derivative is not None:
            return self.normal_derivative(k)
        D = self.grid.normal_derivative_matrix(k)
        return self.data @ D.T

    def trace(self, k: int = 0) -> np.ndarray:
        """``d^k/dx_n^k`` at ``x_n = 0`` (extrapolated from the first panel if not exact)."""
        if self.boundary:
            raise ValueError("boundary fields have no normal direction")
        if self.normal_trace is not None:
            return self.normal_trace(k)
        row = self.grid.interpolation_matrix([0.0])[0]
        return self.dn(k) @ row

    def derivative(self, tangential: tuple[int, ...], normal: int = 0) -> np.ndarray:
        """Samples of ``d^alpha`` with ``alpha = (tangential, normal)``."""
        base = self.data if self.boundary else self.dn(normal)
        if not any(tangential):
            return base
        xi = self.grid.xi_grid()
        mult = np.ones(self.grid.tangential_shape, dtype=complex)
        for i, a in enumerate(tangential):
            mult = mult * (1j * xi[..., i]) ** a
        if not self.boundary:
            mult = mult[..., None]
        axes = self._t_axes
        hat = np.fft.fftn(base, axes=axes, norm="forward")
        return np.fft.ifftn(hat * mult[None], axes=axes, norm="forward")

    def components_of(self, idx) -> "GridField":
        idx = list(idx)
        nd = tr = None
        if self.normal_derivative is not None:
            nd = (lambda k, f=self.normal_derivative: f(k)[idx])
        if self.normal_trace is not None:
            tr = (lambda k, f=self.normal_trace: f(k)[idx])
        return GridField(self.data[idx], self.grid, self.boundary, nd, tr)

    def component(self, i: int) -> "GridField":
        return self.components_of([i])

    def __add__(self, other: "GridField") -> "GridField":
        nd = tr = None
        if not self.boundary and self.normal_derivative and other.normal_derivative:
            nd = (lambda k, a=self, b=other: a.dn(k) + b.dn(k))
        if not self.boundary and self.normal_trace and other.normal_trace:
            tr = (lambda k, a=self, b=other: a.trace(k) + b.trace(k))
        return GridField(self.data + other.data, self.grid, self.boundary, nd, tr)

    def __sub__(self, other: "GridField") -> "GridField":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "GridField":
        nd = None if self.normal_derivative is None else (lambda k, f=self.normal_derivative: c * f(k))
        tr = None if self.normal_trace is None else (lambda k, f=self.normal_trace: c * f(k))
        return GridField(c * self.data, self.grid, self.boundary, nd, tr)


# ---------------------------------------------------------------------------
# field I/O


def _header(grid: GridSpec, components: int, boundary: bool) -> str:
    return (f"# L={grid.L!r} N={grid.N} n={grid.n} rule={grid.rule} order={grid.order} "
            f"components={components} boundary={int(boundary)} breaks={','.join(repr(float(b)) for b in grid.breaks)}")


def save_field_csv(f: GridField, path) -> None:
    """CSV dump: metadata comment line, then one row per sample (column-major order)."""
    g = f.grid
    cols = ["component"] + [f"i{k + 1}" for k in range(g.d)] + ([] if f.boundary else ["j", "x_n"]) + ["re", "im"]
    idx = np.array(list(np.ndindex(*f.data.shape[::-1])))[:, ::-1]
    vals = f.data.ravel(order="F")
    buf = io.StringIO()
    buf.write(_header(g, f.components, f.boundary) + "\n")
    buf.write(",".join(cols) + "\n")
    xn = g.xn_nodes
    for row, v in zip(idx, vals):
        parts = [str(int(r)) for r in row]
        if not f.boundary:
            parts.append(repr(float(xn[row[-1]])))
        parts += [repr(float(v.real)), repr(float(v.imag))]
        buf.write(",".join(parts) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_field_csv(path) -> GridField:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = dict(tok.split("=", 1) for tok in header[1:].split())
        grid = GridSpec(float(meta["L"]), int(meta["N"]), int(meta["n"]),
                        np.array([float(b) for b in meta["breaks"].split(",")]),
                        meta["rule"], int(meta["order"]))
        boundary = bool(int(meta["boundary"]))
        comps = int(meta["components"])
        fh.readline()
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    shape = (comps,) + grid.tangential_shape + (() if boundary else (grid.nx,))
    vals = body[:, -2] + 1j * body[:, -1]
    return GridField(vals.reshape(shape, order="F"), grid, boundary)
