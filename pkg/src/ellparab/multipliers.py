"""Scaled multiplier families and numerical Michlin-constant scans.

All families are built from :mod:`ellparab.ode_core` at one covariable at a
time.  With ``s = |xi'|`` and ``rho = |xi'| + |q|``:

* ``M1_ell``: ``x_n diag(s^-l, rho^-l) d_n^{l+1} Y blockdiag(Delta1(s), Delta2(rho))``
* ``C1 = Delta1(rho)^-1 (B12 Y2)(0) Delta2(rho)``, ``C2 = Delta2(s)^-1 (B21 Y1)(0) Delta1(s)``
* ``M2`` the scale-balanced coupling matrix, ``S`` its Schur complement.

A Michlin scan samples ``|xi'|^{|g|} |d^g M(xi', q)|`` on dyadic shells of
``xi'`` and rays of ``q``; derivatives are central differences with step
proportional to ``|xi'|``.  The scan can support a uniform bound, not prove it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ode_core import basic_solutions, coupling_set
from .scaling import ScalingMatrix, delta, delta1, delta2
from .symbols import Covariable, ProblemSpec, sphere_points

__all__ = [
    "ScalingMatrix", "delta", "delta1", "delta2", "M1_ell", "C_blocks", "M2_matrices",
    "M2Result", "estimate_lambda0", "MichlinGrid", "MichlinScanReport", "michlin_scan", "family",
]


def M1_ell(spec: ProblemSpec, cov: Covariable, x_n, ell: int) -> np.ndarray:
    """``M1^(ell)`` at one or several ``x_n``; shape ``(len(x_n), 2, 2m)`` (or ``(2, 2m)``)."""
    scalar = np.ndim(x_n) == 0
    x = np.atleast_1d(np.asarray(x_n, dtype=float))
    if np.any(x <= 0):
        raise ValueError("x_n must be positive")
    s, rho, m = cov.xi_norm, cov.rho, spec.m
    Y = basic_solutions(spec, cov)
    dY = Y.matrix(x, dx=ell + 1)  # (2, 2m, X)
    left = np.array([s ** (-ell), rho ** (-ell)])
    right = np.concatenate([np.diag(delta1(m, s)), np.diag(delta2(m, rho))])
    out = x[None, None, :] * left[:, None, None] * dY * right[None, :, None]
    out = np.moveaxis(out, -1, 0)
    return out[0] if scalar else out


def C_blocks(spec: ProblemSpec, cov: Covariable) -> tuple[np.ndarray, np.ndarray]:
    if cov.xi_norm == 0:
        raise ValueError("C blocks need xi' != 0")
    cs = coupling_set(basic_solutions(spec, cov), cov)
    return cs.c1, cs.c2


@dataclass
class M2Result:
    M2: np.ndarray
    M2_tilde: np.ndarray
    S: np.ndarray
    perturbation_norm: float

    @property
    def S_inv_norm(self) -> float:
        return float(np.linalg.norm(np.linalg.inv(self.S), 2))


def M2_matrices(spec: ProblemSpec, cov: Covariable) -> M2Result:
    """``M2`` (via the Schur form), ``M2~`` and ``S`` at one covariable.

    ``perturbation_norm`` is ``|I - S|``; where it is at most 1/2 a Neumann
    series bounds ``|S^-1|`` by 2.
    """
    cs = coupling_set(basic_solutions(spec, cov), cov)
    m, s, rho = spec.m, cov.xi_norm, cov.rho
    D = np.diag(np.concatenate([np.full(m, s), np.full(m, rho)]))
    m2t = np.linalg.inv(D) @ cs.m2 @ D
    pert = float(np.linalg.norm(np.eye(m) - cs.s, 2))
    return M2Result(cs.m2, m2t, cs.s, pert)


def estimate_lambda0(spec: ProblemSpec, directions: np.ndarray | None = None,
                     ratios: np.ndarray | None = None, rays: int = 5,
                     candidates: np.ndarray | None = None) -> tuple[float | None, list[dict]]:
    """Smallest ``Lambda`` in ``{1, 2, ..., 2^10}`` with ``|I - S| <= 1/2`` whenever ``|q| >= Lambda |xi'|``.

    ``S`` is homogeneous of degree 0, so samples use ``|xi'| = 1`` and
    ``|q| = ratio``.  Returns ``(Lambda0 or None, sample rows)``.
    """
    n1 = spec.n - 1
    directions = sphere_points(n1, 8) if directions is None else directions
    ratios = np.geomspace(2.0**-4, 2.0**12, 65) if ratios is None else ratios
    candidates = 2.0 ** np.arange(11) if candidates is None else candidates
    args = np.linspace(-spec.q_angle, spec.q_angle, rays) if spec.theta > 0 else np.array([0.0])
    rows = []
    for d in directions:
        for t in ratios:
            for a in args:
                r = M2_matrices(spec, Covariable(d, t * np.exp(1j * a)))
                rows.append({"ratio": t, "arg_q": a, "perturbation": r.perturbation_norm,
                             "S_inv_norm": r.S_inv_norm})
    for lam in candidates:
        if all(row["perturbation"] <= 0.5 for row in rows if row["ratio"] >= lam):
            return float(lam), rows
    return None, rows


# ---------------------------------------------------------------------------
# Michlin scans

_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}
# higher difference orders lose more digits to cancellation
_REL_STEP = {1: 1e-4, 2: 1e-4, 3: 1e-3, 4: 3e-3}


@dataclass
class MichlinGrid:
    shells: np.ndarray
    directions: np.ndarray
    q_moduli: np.ndarray
    q_args: np.ndarray

    @classmethod
    def dyadic(cls, n: int, q_angle: float, lo: int = -4, hi: int = 4, q_lo: int = -6,
               q_hi: int = 8, rays: int = 3, directions: int = 4) -> "MichlinGrid":
        shells = 2.0 ** np.arange(lo, hi + 1)
        qm = np.concatenate([[0.0], 2.0 ** np.arange(q_lo, q_hi + 1)])
        qa = np.linspace(-q_angle, q_angle, rays) if q_angle > 0 and rays > 1 else np.array([0.0])
        return cls(shells, sphere_points(n - 1, directions), qm, qa)

    def refined(self) -> "MichlinGrid":
        """One dyadic refinement: half-octave shells and q moduli, doubled rays."""
        def halve(v):
            pos = v[v > 0]
            mids = np.sqrt(pos[:-1] * pos[1:])
            return np.sort(np.concatenate([v, mids]))

        qa = self.q_args
        if len(qa) > 1:
            qa = np.linspace(qa[0], qa[-1], 2 * len(qa) - 1)
        dirs = self.directions
        if dirs.shape[1] > 1:
            dirs = sphere_points(dirs.shape[1], 2 * max(4, int(round(len(dirs) ** (1 / (dirs.shape[1] - 1))))))
        return MichlinGrid(halve(self.shells), dirs, halve(self.q_moduli), qa)


@dataclass
class MichlinScanReport:
    name: str
    n: int
    max_order: int
    sup_by_order: dict[int, float]
    constant: float
    refined_constant: float | None = None
    rows: list[dict] = field(default_factory=list)

    @property
    def refinement_ratio(self) -> float | None:
        if self.refined_constant is None:
            return None
        return abs(self.refined_constant - self.constant) / self.constant if self.constant else 0.0

    @property
    def consistent(self) -> bool:
        """Finite constant that moves by less than 10% under refinement."""
        ok = np.isfinite(self.constant)
        r = self.refinement_ratio
        return bool(ok and (r is None or r < 0.10))


def _gammas(n1: int, order: int):
    for combo in itertools.combinations_with_replacement(range(n1), order):
        g = [0] * n1
        for i in combo:
            g[i] += 1
        yield tuple(g)


def _scan(func: Callable, n: int, grid: MichlinGrid, max_order: int, keep_rows: bool):
    n1 = n - 1
    gammas = [g for k in range(max_order + 1) for g in sorted(set(_gammas(n1, k)))]
    sup = {k: 0.0 for k in range(max_order + 1)}
    rows = []
    for si, s in enumerate(grid.shells):
        for di, d in enumerate(grid.directions):
            xi0 = s * d
            for qm in grid.q_moduli:
                for ai, a in enumerate(grid.q_args if qm > 0 else grid.q_args[:1]):
                    q = qm * np.exp(1j * a)
                    cache: dict = {}

                    def value(offset, h):
                        key = (offset, h)
                        if key not in cache:
                            cache[key] = np.asarray(func(xi0 + h * np.asarray(offset), q))
                        return cache[key]

                    local = {k: 0.0 for k in range(max_order + 1)}
                    for g in gammas:
                        k = sum(g)
                        h = _REL_STEP.get(k, 1e-4) * s
                        acc = 0.0
                        for offs in itertools.product(*[_STENCILS[gi].items() for gi in g]):
                            off = tuple(o for o, _ in offs)
                            w = np.prod([c for _, c in offs])
                            acc = acc + w * value(off, h)
                        deriv = acc / h**k if k else acc
                        mats = deriv.reshape((-1,) + deriv.shape[-2:]) if deriv.ndim >= 2 else deriv.reshape(-1, 1, 1)
                        val = s**k * max(np.linalg.norm(mm, 2) for mm in mats)
                        local[k] = max(local[k], val)
                    for k, v in local.items():
                        sup[k] = max(sup[k], v)
                        if keep_rows:
                            rows.append({"xi_norm": s, "direction": di, "q_abs": qm, "q_arg": ai, "order": k, "sup": v})
    return sup, rows


def michlin_scan(func: Callable, n: int, grid: MichlinGrid, name: str = "M",
                 refine: bool = True, keep_rows: bool = True,
                 refined_func: Callable | None = None) -> MichlinScanReport:
    """Sample ``|xi'|^{|g|} |d^g M|`` for ``|g| <= floor(n/2) + 1``.

    ``func(xi_prime, q)`` returns a matrix, or a stack of matrices (e.g. over
    ``x_n`` samples) whose supremum is taken.  ``refined_func`` replaces
    ``func`` on the refined pass (e.g. with denser ``x_n`` samples).
    """
    max_order = n // 2 + 1
    sup, rows = _scan(func, n, grid, max_order, keep_rows)
    rep = MichlinScanReport(name, n, max_order, sup, max(sup.values()), rows=rows)
    if refine:
        sup_f, _ = _scan(refined_func or func, n, grid.refined(), max_order, False)
        rep.refined_constant = max(sup_f.values())
    return rep


def family(spec: ProblemSpec, name: str, x_samples: np.ndarray | None = None,
           refined: bool = False) -> Callable:
    """Multiplier family by name: ``M1_<ell>``, ``C1``, ``C2``, ``M2``, ``M2_tilde``, ``S_inv``.

    ``M1`` families take the supremum over ``x_n`` samples in ``[1e-3, 10]``
    (25 points, 49 when ``refined``).
    """
    if x_samples is None:
        x_samples = np.geomspace(1e-3, 10.0, 49 if refined else 25)
    if name.startswith("M1_"):
        ell = int(name[3:])
        return lambda xi, q: M1_ell(spec, Covariable(xi, q), x_samples, ell)
    if name == "C1":
        return lambda xi, q: C_blocks(spec, Covariable(xi, q))[0]
    if name == "C2":
        return lambda xi, q: C_blocks(spec, Covariable(xi, q))[1]
    if name == "M2":
        return lambda xi, q: M2_matrices(spec, Covariable(xi, q)).M2
    if name == "M2_tilde":
        return lambda xi, q: M2_matrices(spec, Covariable(xi, q)).M2_tilde
    if name == "S_inv":
        return lambda xi, q: np.linalg.inv(M2_matrices(spec, Covariable(xi, q)).S)
    raise KeyError(f"unknown multiplier family {name!r}")
