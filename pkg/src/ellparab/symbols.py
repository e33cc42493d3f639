"""Constant-coefficient principal symbols of the transmission model problem.

The elliptic side is ``A1(xi) = sum_{|a|=2m} a1[a] xi^a``; the parabolic side
carries the parameter through ``q = lambda**(1/2m)``:
``A2~(xi, q) = sum_{|a|+k=2m} a2[(a, k)] q^k xi^a``.

Characteristic polynomials in the normal covariable are split into the
factors ``A+`` (roots in the upper half plane) and ``A-``.  For the
parabolic side the split is taken for the *reflected* symbol
``A2(xi', t, q) = A2~(xi', -t, q)``, which is the operator that acts on
``x_n > 0`` after the substitution ``x_n -> -x_n``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

MultiIndex = tuple[int, ...]


class SectorError(ValueError):
    """Raised when the spectral parameter leaves its closed sector."""


class RootError(ValueError):
    """Raised when the characteristic roots violate proper ellipticity."""


def multi_indices(n: int, order: int) -> list[MultiIndex]:
    """All multi-indices of length ``n`` with ``|alpha| == order``."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), order):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return sorted(set(out), reverse=True)


def _monomial(xi: np.ndarray, alpha: MultiIndex) -> complex:
    return complex(np.prod([xi[i] ** a for i, a in enumerate(alpha)]))


@dataclass(frozen=True)
class ProblemSpec:
    """Principal symbols ``A1``, ``A2~`` of order ``2m`` in ``n`` dimensions.

    ``a1`` maps ``alpha`` (``|alpha| = 2m``) to a coefficient, ``a2`` maps
    ``(alpha, k)`` with ``|alpha| + k = 2m`` to a coefficient.  Missing
    entries are zero.  ``theta`` is the half-angle of the sector for
    ``lambda``; ``q`` then lives in the sector of half-angle ``theta/(2m)``.
    """

    m: int
    n: int
    theta: float
    a1: Mapping[MultiIndex, complex] = field(default_factory=dict)
    a2: Mapping[tuple[MultiIndex, int], complex] = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        # theta = pi is allowed by one convention of the source; we use [0, pi)
        if not 0.0 <= self.theta < np.pi:
            raise ValueError(f"theta must lie in [0, pi), got {self.theta}")
        for alpha in self.a1:
            if len(alpha) != self.n or sum(alpha) != 2 * self.m:
                raise ValueError(f"a1 index {alpha} is not of order 2m={2 * self.m} in n={self.n}")
        for key in self.a2:
            alpha, k = key
            if len(alpha) != self.n or sum(alpha) + k != 2 * self.m or k < 0:
                raise ValueError(f"a2 index {key} violates |alpha|+k = 2m")
        object.__setattr__(self, "a1", {tuple(a): complex(c) for a, c in self.a1.items() if c != 0})
        object.__setattr__(
            self, "a2", {(tuple(a), int(k)): complex(c) for (a, k), c in self.a2.items() if c != 0}
        )

    @property
    def order(self) -> int:
        return 2 * self.m

    @property
    def q_angle(self) -> float:
        """Half-angle of the closed sector that ``q`` must lie in."""
        return self.theta / (2 * self.m)


@dataclass(frozen=True)
class Covariable:
    """Tangential frequency ``xi'`` together with ``q = lambda**(1/2m)``."""

    xi_prime: np.ndarray
    q: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "xi_prime", np.atleast_1d(np.asarray(self.xi_prime, dtype=float)))
        object.__setattr__(self, "q", complex(self.q))

    @property
    def xi_norm(self) -> float:
        return float(np.linalg.norm(self.xi_prime))

    @property
    def rho(self) -> float:
        return self.xi_norm + abs(self.q)

    def lam(self, m: int) -> complex:
        return self.q ** (2 * m)

    def scaled(self, r: float) -> "Covariable":
        """The covariable ``(xi'/r, q/r)``."""
        return Covariable(self.xi_prime / r, self.q / r)

    @classmethod
    def from_lambda(cls, xi_prime, lam: complex, m: int) -> "Covariable":
        return cls(xi_prime, q_from_lambda(lam, m))


def q_from_lambda(lam: complex, m: int) -> complex:
    """Principal branch of ``lambda**(1/2m)``."""
    lam = complex(lam)
    if lam == 0:
        return 0j
    return abs(lam) ** (1.0 / (2 * m)) * np.exp(1j * np.angle(lam) / (2 * m))


def in_sector(q: complex, half_angle: float, tol: float = 1e-12) -> bool:
    q = complex(q)
    if abs(q) == 0:
        return True
    return abs(np.angle(q)) <= half_angle + tol


def _check_q(spec: ProblemSpec, q: complex) -> None:
    if not in_sector(q, spec.q_angle):
        raise SectorError(
            f"q={q} lies outside the closed sector |arg q| <= {spec.q_angle:.6g}"
        )


# ---------------------------------------------------------------------------
# presets


def _poly_mul(p: Mapping, r: Mapping) -> dict:
    """Multiply two symbols stored as {(alpha, k): coef} dictionaries."""
    out: dict = {}
    for (a, k), c in p.items():
        for (b, l), d in r.items():
            key = (tuple(x + y for x, y in zip(a, b)), k + l)
            out[key] = out.get(key, 0) + c * d
    return out


def _quadratic(K: np.ndarray, gamma: complex = 0.0, scale: complex = 1.0) -> dict:
    """``scale * (xi^T K xi + gamma q^2)`` as an (alpha, k) dictionary."""
    n = K.shape[0]
    out: dict = {}
    for i in range(n):
        for j in range(n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            key = (tuple(alpha), 0)
            out[key] = out.get(key, 0) + scale * K[i, j]
    if gamma:
        out[((0,) * n, 2)] = scale * gamma
    return out


def _strip_k(d: Mapping) -> dict:
    return {a: c for (a, k), c in d.items()}


def laplace_heat(n: int = 2, theta: float = np.pi / 2) -> ProblemSpec:
    """``A1 = |xi|^2`` paired with ``A2~ = |xi|^2 + lambda`` (m = 1)."""
    I = np.eye(n)
    return ProblemSpec(1, n, theta, _strip_k(_quadratic(I)), _quadratic(I, 1.0), name="laplace_heat")


def biharmonic_heat2(n: int = 2, theta: float = np.pi / 2) -> ProblemSpec:
    """``A1 = |xi|^4`` paired with ``A2~ = (|xi|^2 + q^2)^2`` (m = 2)."""
    I = np.eye(n)
    a1 = _poly_mul(_quadratic(I), _quadratic(I))
    a2 = _poly_mul(_quadratic(I, 1.0), _quadratic(I, 1.0))
    return ProblemSpec(2, n, theta, _strip_k(a1), a2, name="biharmonic_heat2")


def hyperbolic(n: int = 2, theta: float = np.pi / 2) -> ProblemSpec:
    """Non-elliptic ``A1 = xi_1^2 - xi_2^2`` with the heat symbol on side 2."""
    K = np.zeros((n, n))
    K[0, 0], K[1, 1] = 1.0, -1.0
    I = np.eye(n)
    return ProblemSpec(1, n, theta, _strip_k(_quadratic(K)), _quadratic(I, 1.0), name="hyperbolic")


def random_spec(rng: np.random.Generator, m: int, n: int = 2, theta: float = np.pi / 2,
                double_root: bool = False) -> ProblemSpec:
    """Random elliptic / parameter-elliptic pair built from SPD quadratic forms.

    Products of SPD forms are properly elliptic; multiplying a whole symbol by
    a unimodular constant leaves its roots untouched.  ``double_root`` reuses
    one factor ``m`` times so the characteristic roots are ``m``-fold.
    """

    def spd():
        B = rng.normal(size=(n, n))
        return B @ B.T + 0.5 * np.eye(n)

    a1: dict = {((0,) * n, 0): np.exp(1j * rng.uniform(-np.pi, np.pi))}
    a2: dict = {((0,) * n, 0): np.exp(1j * rng.uniform(-np.pi, np.pi))}
    K1, K2, g = spd(), spd(), rng.uniform(0.5, 2.0)
    for _ in range(m):
        if not double_root:
            K1, K2, g = spd(), spd(), rng.uniform(0.5, 2.0)
        a1 = _poly_mul(a1, _quadratic(K1))
        a2 = _poly_mul(a2, _quadratic(K2, g))
    return ProblemSpec(m, n, theta, _strip_k(a1), a2, name=f"random_m{m}")


PRESETS = {
    "laplace_heat": laplace_heat,
    "biharmonic_heat2": biharmonic_heat2,
    "hyperbolic": hyperbolic,
}


# ---------------------------------------------------------------------------
# evaluation


def evaluate_A1(spec: ProblemSpec, xi) -> complex:
    xi = np.asarray(xi, dtype=float)
    return sum((c * _monomial(xi, a) for a, c in spec.a1.items()), 0j)


def evaluate_A2(spec: ProblemSpec, xi, q: complex) -> complex:
    """Unreflected parabolic symbol ``A2~(xi, q)``."""
    _check_q(spec, q)
    xi = np.asarray(xi, dtype=float)
    q = complex(q)
    return sum((c * q**k * _monomial(xi, a) for (a, k), c in spec.a2.items()), 0j)


def symbol_grid(spec: ProblemSpec, which: Literal["A1", "A2"], xis: list[np.ndarray],
                q: complex = 0j, reflect: bool = False) -> np.ndarray:
    """Vectorised symbol on a tensor grid of wavenumbers.

    ``xis`` holds one 1-D wavenumber array per coordinate; the result has the
    broadcast shape of ``np.meshgrid(*xis, indexing='ij')``.
    """
    grids = list(np.meshgrid(*[np.asarray(x, dtype=float) for x in xis], indexing="ij"))
    if reflect:
        grids[-1] = -grids[-1]
    out = np.zeros(grids[0].shape, dtype=complex)
    if which == "A1":
        items = [(a, 0, c) for a, c in spec.a1.items()]
    else:
        _check_q(spec, q)
        items = [(a, k, c) for (a, k), c in spec.a2.items()]
    for a, k, c in items:
        term = c * complex(q) ** k * np.ones_like(out)
        for g, e in zip(grids, a):
            if e:
                term = term * g**e
        out += term
    return out


def char_poly(spec: ProblemSpec, which: Literal["A1", "A2"], cov: Covariable,
              reflect: bool = True) -> np.ndarray:
    """Coefficients (highest degree first) of ``t -> A(xi', t[, q])``.

    For ``which="A2"`` the reflected symbol is used unless ``reflect=False``.
    """
    xi_p = cov.xi_prime
    if len(xi_p) != spec.n - 1:
        raise ValueError(f"xi' must have length n-1={spec.n - 1}")
    deg = 2 * spec.m
    coef = np.zeros(deg + 1, dtype=complex)
    if which == "A1":
        items = [(a, 0, c) for a, c in spec.a1.items()]
        q = 0j
    elif which == "A2":
        _check_q(spec, cov.q)
        items = [(a, k, c) for (a, k), c in spec.a2.items()]
        q = cov.q
    else:
        raise ValueError(f"which must be 'A1' or 'A2', got {which!r}")
    for a, k, c in items:
        j = a[-1]
        sign = (-1) ** j if (which == "A2" and reflect) else 1
        coef[deg - j] += sign * c * q**k * _monomial(xi_p, a[:-1])
    return coef


# ---------------------------------------------------------------------------
# roots


@dataclass
class RootSplit:
    """Characteristic roots split by half plane, with the monic factors.

    ``clusters_plus`` lists ``(root, multiplicity)`` for the upper roots; the
    polynomial equals ``lead * polymul(a_plus, a_minus)``.
    """

    roots_plus: np.ndarray
    roots_minus: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    lead: complex
    clusters_plus: list[tuple[complex, int]]
    scale: float
    poly: np.ndarray

    @property
    def m(self) -> int:
        return len(self.roots_plus)


def _polish(p: np.ndarray, z: complex, mult: int) -> complex:
    """One Newton step on ``p^(mult-1)``, kept only if it reduces the residual."""
    d = p
    for _ in range(mult - 1):
        d = np.polyder(d)
    dd = np.polyder(d)
    val, der = np.polyval(d, z), np.polyval(dd, z)
    if der == 0:
        return z
    z1 = z - val / der
    return z1 if abs(np.polyval(d, z1)) <= abs(val) else z


def _cluster(roots: np.ndarray, tol: float) -> list[list[int]]:
    n = len(roots)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(roots[i] - roots[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def polynomial_roots(poly: np.ndarray, scale: float, cluster_tol: float = 1e-6):
    """Roots of ``poly`` with near-coincident ones merged into exact clusters.

    Returns a list of ``(root, multiplicity)``.  Eigenvalues of the companion
    matrix scatter a ``k``-fold root by ``~eps**(1/k)``; the cluster mean is
    far more accurate, and one Newton step on the ``(k-1)``-th derivative
    polishes it.
    """
    poly = np.asarray(poly, dtype=complex)
    raw = np.roots(poly)
    out = []
    for grp in _cluster(raw, cluster_tol * scale):
        z = complex(np.mean(raw[grp]))
        out.append((_polish(poly, z, len(grp)), len(grp)))
    return out


def compute_roots(spec: ProblemSpec, which: Literal["A1", "A2"], cov: Covariable,
                  eps_root: float = 1e-8, cluster_tol: float = 1e-6) -> RootSplit:
    """Split the ``2m`` characteristic roots into upper / lower half planes."""
    if which == "A1":
        scale = cov.xi_norm
        if scale == 0:
            raise RootError("A1 roots need xi' != 0")
    else:
        scale = cov.rho
        if scale == 0:
            raise RootError("A2 roots need (xi', q) != (0, 0)")
    poly = char_poly(spec, which, cov)
    lead = poly[0]
    if abs(lead) <= 1e-14 * np.max(np.abs(poly)):
        raise RootError(f"{which}: characteristic polynomial loses degree (leading coefficient {lead})")
    clusters = polynomial_roots(poly, scale, cluster_tol)
    plus, minus = [], []
    for z, k in clusters:
        if abs(z.imag) <= eps_root * scale:
            raise RootError(f"{which}: root {z} at {cov} lies on the real axis (proper ellipticity fails)")
        (plus if z.imag > 0 else minus).append((z, k))
    n_plus = sum(k for _, k in plus)
    n_minus = sum(k for _, k in minus)
    if n_plus != spec.m or n_minus != spec.m:
        raise RootError(f"{which}: root counts ({n_plus}, {n_minus}) != ({spec.m}, {spec.m})")
    rp = np.array([z for z, k in plus for _ in range(k)], dtype=complex)
    rm = np.array([z for z, k in minus for _ in range(k)], dtype=complex)
    return RootSplit(rp, rm, np.poly(rp), np.poly(rm), complex(lead), plus, scale, poly)


def root_counts(spec: ProblemSpec, which: Literal["A1", "A2"], cov: Covariable,
                eps_root: float = 1e-8) -> tuple[int, int, int]:
    """Number of roots in C+, C- and (numerically) on the real line."""
    poly = char_poly(spec, which, cov)
    scale = cov.xi_norm if which == "A1" else cov.rho
    r = np.roots(poly)
    # a k-fold real root is perturbed by ~eps**(1/k); use a loose band
    band = max(eps_root, 1e-6) * scale
    real = int(np.sum(np.abs(r.imag) <= band))
    return int(np.sum(r.imag > band)), int(np.sum(r.imag < -band)), real + (2 * spec.m - len(r))


# ---------------------------------------------------------------------------
# ellipticity checks


def sphere_points(n: int, k: int) -> np.ndarray:
    """Points on ``S^{n-1}`` from a tensor grid of hyperspherical angles."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    polar = [np.linspace(0, np.pi, k + 1) for _ in range(n - 2)]
    azim = np.linspace(0, 2 * np.pi, k, endpoint=False)
    pts = []
    for angles in itertools.product(*polar, azim):
        x = np.ones(n)
        s = 1.0
        for i, a in enumerate(angles[:-1]):
            x[i] = s * np.cos(a)
            s *= np.sin(a)
        x[n - 2] = s * np.cos(angles[-1])
        x[n - 1] = s * np.sin(angles[-1])
        pts.append(x)
    return np.unique(np.round(np.array(pts), 14), axis=0)


@dataclass
class EllipticityReport:
    min_A1: float
    argmin_A1: np.ndarray
    min_A2: float
    argmin_A2: tuple[np.ndarray, complex]
    root_counts: dict[str, set]
    failures: list[str]
    tol: float

    @property
    def passed(self) -> bool:
        return not self.failures

    def rows(self) -> list[dict]:
        return [
            {"quantity": "min|A1|", "value": self.min_A1, "location": " ".join(f"{v:.6g}" for v in self.argmin_A1)},
            {"quantity": "min|A2|", "value": self.min_A2,
             "location": " ".join(f"{v:.6g}" for v in self.argmin_A2[0]) + f" lambda={self.argmin_A2[1]:.6g}"},
            {"quantity": "root_counts_A1", "value": len(self.root_counts["A1"]),
             "location": ";".join(map(str, sorted(self.root_counts["A1"])))},
            {"quantity": "root_counts_A2", "value": len(self.root_counts["A2"]),
             "location": ";".join(map(str, sorted(self.root_counts["A2"])))},
        ]


def check_ellipticity(spec: ProblemSpec, directions: int = 16, tol: float = 1e-10) -> EllipticityReport:
    """Sampled check of ellipticity, parameter-ellipticity and root counts.

    ``|A1|`` is minimised over ``S^{n-1}``; ``|A2~|`` over the compact set
    ``|xi|^{2m} + |lambda| = 1`` with ``|arg lambda| <= theta`` (boundary
    rays always included).  Root counts are recorded at sampled ``xi'`` on
    ``S^{n-2}`` and at sampled ``(xi', q)`` with ``|xi'| + |q| = 1``.
    """
    if directions < 8:
        raise ValueError("need at least 8 directions per angular dimension")
    m, n = spec.m, spec.n
    sphere = sphere_points(n, directions)
    a1_vals = np.array([abs(evaluate_A1(spec, x)) for x in sphere])
    i1 = int(np.argmin(a1_vals))

    ts = np.linspace(0.0, 1.0, directions + 1)
    args = np.linspace(-spec.theta, spec.theta, directions + 1) if spec.theta > 0 else np.array([0.0])
    best = (np.inf, sphere[0], 0j)
    for t in ts:
        for a in args:
            lam = (1 - t) * np.exp(1j * a)
            q = q_from_lambda(lam, m)
            for x in sphere:
                v = abs(evaluate_A2(spec, t ** (1 / (2 * m)) * x, q))
                if v < best[0]:
                    best = (v, t ** (1 / (2 * m)) * x, lam)

    failures = []
    if a1_vals[i1] <= tol:
        failures.append(f"A1 vanishes near xi={sphere[i1]}")
    if best[0] <= tol:
        failures.append(f"A2 vanishes near xi={best[1]}, lambda={best[2]}")

    counts: dict[str, set] = {"A1": set(), "A2": set()}
    tangential = sphere_points(n - 1, directions)
    for x in tangential:
        c = root_counts(spec, "A1", Covariable(x))
        counts["A1"].add(c)
        if c != (m, m, 0):
            failures.append(f"A1 root count {c} at xi'={x}")
    qargs = np.linspace(-spec.q_angle, spec.q_angle, 5) if spec.theta > 0 else np.array([0.0])
    for s in np.linspace(0.0, 1.0, directions + 1):
        for a in qargs:
            q = (1 - s) * np.exp(1j * a)
            for x in (tangential if s > 0 else tangential[:1]):
                c = root_counts(spec, "A2", Covariable(s * x, q))
                counts["A2"].add(c)
                if c != (m, m, 0):
                    failures.append(f"A2 root count {c} at xi'={s * x}, q={q}")
    return EllipticityReport(float(a1_vals[i1]), sphere[i1], float(best[0]), (best[1], best[2]),
                             counts, failures, tol)


def n_ellipticity_grid(n: int, directions: int, lam_max: float, lam_count: int,
                       theta: float = 0.0, arg_count: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere wavenumbers and a sector grid of ``lambda`` values.

    The N-ellipticity ratio is invariant under ``(xi, lam) -> (r xi, r^{2m} lam)``
    so ``|xi| = 1`` loses nothing.  ``lam`` moduli include 0 and are otherwise
    geometric up to ``lam_max``.
    """
    xis = sphere_points(n, directions)
    mods = np.concatenate([[0.0], np.geomspace(lam_max * 1e-6, lam_max, lam_count - 1)])
    args = np.linspace(-theta, theta, arg_count) if arg_count > 1 else np.array([0.0])
    lams = (mods[:, None] * np.exp(1j * args)[None, :]).ravel()
    return xis, lams


def check_N_ellipticity(spec: ProblemSpec, xis: np.ndarray, lams: np.ndarray) -> float:
    """``min |A1(xi) A2(xi, lam)| / (|xi|^{2m} (|lam| + |xi|^{2m}))`` over the grid."""
    m = spec.m
    best = np.inf
    for x in np.atleast_2d(xis):
        r2m = np.linalg.norm(x) ** (2 * m)
        if r2m == 0:
            raise ValueError("N-ellipticity grid must exclude xi = 0")
        a1 = abs(evaluate_A1(spec, x))
        for lam in np.atleast_1d(lams):
            a2 = abs(evaluate_A2(spec, x, q_from_lambda(lam, m)))
            best = min(best, a1 * a2 / (r2m * (abs(lam) + r2m)))
    return float(best)
