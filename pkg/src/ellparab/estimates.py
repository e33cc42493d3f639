"""Numerical sweeps of the half-space a priori estimates over ``q``.

Each inequality is evaluated as ``LHS / RHS`` for fixed data at every ``q``
of a sweep.  A uniform constant shows up as a ratio that levels off; the
operational test is the plateau factor (max / min over the upper half of the
sweep).  Inequalities, with ``s = |D'|`` and norms on the half-space:

``homogeneous_split``
    ``|u1|_2m + |u2|_m + |q|^m |u2|_0  <=  C sum ||g~_j||_{2m-j+1}`` with ``g~ = E_1 g``.
``homogeneous_weighted``
    ``|u1|_2m + |q|^m |u1|_m + [[u2]]_2m  <=  C sum [[g~_j]]_{2m-j+1}`` with ``g~ = E_q g``.
``full_split``
    ``||u1||_2m + ||u2||_m + |q|^m ||u2||_0  <=  C (||f1|| + ||f2|| + sum ||g_j||_{2m-j+1-1/p} + ||u1||_0)``.
``full_weighted``
    ``||u1||_2m + |q|^m ||u1||_m + [[u2]]_2m  <=  C (|q|^m ||f1|| + ||f2|| + sum [[g_j]]_{2m-j+1-1/p} + |q|^m ||u1||_0)``.
``strengthened``
    ``full_split`` with ``||u2||_2m`` on the left and no parameter weight.
    This one is false uniformly in ``q``; its ratio should grow.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .grids import GridField, GridSpec
from .halfspace import extend_boundary, manufactured_solution, solve_homogeneous
from .norms import lp_norm, param_norm, seminorm, sobolev_norm, trace_norm
from .symbols import ProblemSpec

INEQUALITIES = ("homogeneous_split", "homogeneous_weighted", "full_split", "full_weighted", "strengthened")

__all__ = ["INEQUALITIES", "EstimateRow", "EstimateReport", "random_boundary_data", "estimate_terms",
           "estimate_sweep", "interpolation_ratio"]


def random_boundary_data(grid: GridSpec, m: int, seed: int = 0, kmax: int = 4, decay: float = 1.0) -> GridField:
    """Mean-zero band-limited boundary data with ``2m`` components.

    Coefficients live on ``1 <= max|k_i| <= kmax`` and are drawn in a fixed
    order, so the field is the same function for every ``N > 2 kmax``.
    Amplitudes fall off like ``(1 + |k|)^-decay``.
    """
    if grid.N <= 2 * kmax:
        raise ValueError("N must exceed 2 kmax")
    rng = np.random.default_rng(seed)
    hat = np.zeros((2 * m,) + grid.tangential_shape, dtype=complex)
    base = 2 * np.pi / grid.L
    for k in itertools.product(range(-kmax, kmax + 1), repeat=grid.d):
        if not any(k):
            continue
        amp = (1 + base * np.linalg.norm(k)) ** (-decay)
        c = rng.normal(size=2 * m) + 1j * rng.normal(size=2 * m)
        hat[(slice(None),) + tuple(ki % grid.N for ki in k)] = amp * c
    return GridField.from_hat(hat, grid, boundary=True)


@dataclass
class EstimateRow:
    q: complex
    inequality: str
    lhs: float
    rhs: float
    lhs_terms: dict[str, float] = field(default_factory=dict)
    rhs_terms: dict[str, float] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else float("inf")
        return self.lhs / self.rhs


def _f(x) -> float:
    return float(np.sum(x))


def estimate_terms(spec: ProblemSpec, q: complex, u: GridField, g: GridField, f: GridField | None = None,
                   p: float = 2.0, which=INEQUALITIES) -> list[EstimateRow]:
    """Evaluate the requested inequalities for one solution ``u`` with data ``(f, g)``.

    The homogeneous inequalities are only meaningful when ``f = 0``; they are
    skipped when ``f`` is given and nonzero.
    """
    m = spec.m
    Q = abs(q)
    u1, u2 = u.component(0), u.component(1)
    f_zero = f is None or not np.any(f.data)
    rows: list[EstimateRow] = []
    cache: dict = {}

    def c(key, fn):
        if key not in cache:
            cache[key] = _f(fn())
        return cache[key]

    semi = lambda w, name, k: c(("semi", name, k), lambda: seminorm(w, k, p))  # noqa: E731
    sob = lambda w, name, k: c(("sob", name, k), lambda: sobolev_norm(w, k, p))  # noqa: E731
    l0 = lambda w, name: c(("lp", name), lambda: lp_norm(w, p))  # noqa: E731

    def u2_param(k):
        return sob(u2, "u2", k) + Q**k * l0(u2, "u2")

    f1n = 0.0 if f is None else _f(lp_norm(f.component(0), p))
    f2n = 0.0 if f is None else _f(lp_norm(f.component(1), p))
    gj = [g.component(j) for j in range(2 * m)]

    if f_zero and ("homogeneous_split" in which or "homogeneous_weighted" in which):
        if "homogeneous_split" in which:
            gt = extend_boundary(g, q, parameter_dependent=False)
            lt = {"|u1|_2m": semi(u1, "u1", 2 * m), "|u2|_m": semi(u2, "u2", m),
                  "|q|^m|u2|_0": Q**m * l0(u2, "u2")}
            rt = {f"||g~{j + 1}||": _f(sobolev_norm(gt.component(j), 2 * m - j, p)) for j in range(2 * m)}
            rows.append(EstimateRow(q, "homogeneous_split", sum(lt.values()), sum(rt.values()), lt, rt))
        if "homogeneous_weighted" in which:
            gt = extend_boundary(g, q, parameter_dependent=True)
            lt = {"|u1|_2m": semi(u1, "u1", 2 * m), "|q|^m|u1|_m": Q**m * semi(u1, "u1", m),
                  "[[u2]]_2m": u2_param(2 * m)}
            rt = {f"[[g~{j + 1}]]": _f(param_norm(gt.component(j), 2 * m - j, p, m=m, q=q))
                  for j in range(2 * m)}
            rows.append(EstimateRow(q, "homogeneous_weighted", sum(lt.values()), sum(rt.values()), lt, rt))

    if any(w in which for w in ("full_split", "full_weighted", "strengthened")):
        gsplit = {f"||g{j + 1}||": _f(trace_norm(gj[j], 2 * m - j, p, m=m)) for j in range(2 * m)}
        rhs_split = {"||f1||": f1n, "||f2||": f2n, **gsplit, "||u1||_0": l0(u1, "u1")}
        if "full_split" in which:
            lt = {"||u1||_2m": sob(u1, "u1", 2 * m), "||u2||_m": sob(u2, "u2", m),
                  "|q|^m||u2||_0": Q**m * l0(u2, "u2")}
            rows.append(EstimateRow(q, "full_split", sum(lt.values()), sum(rhs_split.values()), lt, rhs_split))
        if "strengthened" in which:
            lt = {"||u1||_2m": sob(u1, "u1", 2 * m), "||u2||_2m": sob(u2, "u2", 2 * m)}
            rows.append(EstimateRow(q, "strengthened", sum(lt.values()), sum(rhs_split.values()), lt,
                                    dict(rhs_split)))
        if "full_weighted" in which:
            lt = {"||u1||_2m": sob(u1, "u1", 2 * m), "|q|^m||u1||_m": Q**m * sob(u1, "u1", m),
                  "[[u2]]_2m": u2_param(2 * m)}
            rt = {"|q|^m||f1||": Q**m * f1n, "||f2||": f2n}
            rt.update({f"[[g{j + 1}]]": _f(trace_norm(gj[j], 2 * m - j, p, m=m, q=q)) for j in range(2 * m)})
            rt["|q|^m||u1||_0"] = Q**m * l0(u1, "u1")
            rows.append(EstimateRow(q, "full_weighted", sum(lt.values()), sum(rt.values()), lt, rt))
    return rows


@dataclass
class EstimateReport:
    spec_name: str
    data: str
    rows: list[EstimateRow]

    def inequalities(self) -> list[str]:
        return [w for w in INEQUALITIES if any(r.inequality == w for r in self.rows)]

    def series(self, inequality: str) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in self.rows if r.inequality == inequality]
        return np.array([r.q for r in sel]), np.array([r.ratio for r in sel])

    def max_ratio(self, inequality: str) -> float:
        return float(np.max(self.series(inequality)[1]))

    def plateau_factor(self, inequality: str) -> float:
        """``max / min`` of the ratio over the upper half of the sweep (by ``|q|``)."""
        q, r = self.series(inequality)
        order = np.argsort(np.abs(q), kind="stable")
        upper = r[order][len(r) // 2:]
        return float(np.max(upper) / np.min(upper))

    def growth(self, inequality: str) -> float:
        """Last over first ratio of the sweep (by ``|q|``)."""
        q, r = self.series(inequality)
        order = np.argsort(np.abs(q), kind="stable")
        return float(r[order][-1] / r[order][0])

    def monotone(self, inequality: str, rtol: float = 1e-9) -> bool:
        q, r = self.series(inequality)
        r = r[np.argsort(np.abs(q), kind="stable")]
        return bool(np.all(np.diff(r) >= -rtol * np.abs(r[:-1])))

    def summary(self) -> list[dict]:
        return [{"inequality": w, "max_ratio": self.max_ratio(w), "plateau_factor": self.plateau_factor(w),
                 "growth": self.growth(w), "monotone": self.monotone(w)} for w in self.inequalities()]

    def write_csv(self, directory, prefix: str = "estimates") -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        main, terms, summ = (directory / f"{prefix}{s}.csv" for s in ("", "_terms", "_summary"))
        with open(main, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q_abs", "q_arg", "inequality", "lhs", "rhs", "ratio"])
            for r in self.rows:
                w.writerow([repr(abs(r.q)), repr(float(np.angle(r.q))), r.inequality,
                            repr(r.lhs), repr(r.rhs), repr(r.ratio)])
        with open(terms, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q_abs", "q_arg", "inequality", "side", "term", "value"])
            for r in self.rows:
                for side, d in (("lhs", r.lhs_terms), ("rhs", r.rhs_terms)):
                    for k, v in d.items():
                        w.writerow([repr(abs(r.q)), repr(float(np.angle(r.q))), r.inequality, side, k, repr(v)])
        with open(summ, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["inequality", "max_ratio", "plateau_factor", "growth", "monotone"])
            for s in self.summary():
                w.writerow([s["inequality"], repr(s["max_ratio"]), repr(s["plateau_factor"]),
                            repr(s["growth"]), int(s["monotone"])])
        return [main, terms, summ]


def estimate_sweep(spec: ProblemSpec, grid: GridSpec, qs, data: Literal["homogeneous", "manufactured"] = "homogeneous",
                   p: float = 2.0, seed: int = 0, which=INEQUALITIES, q0: float = 1.0,
                   g: GridField | None = None) -> EstimateReport:
    """Ratios of every inequality over the ``q`` values ``qs``.

    ``data="homogeneous"`` solves ``f = 0`` with random boundary data (or the
    given ``g``); ``data="manufactured"`` uses the Gaussian-modulated family,
    whose ``f`` and ``g`` change with ``q``.
    """
    rows: list[EstimateRow] = []
    qs = [complex(x) for x in np.atleast_1d(qs)]
    if any(abs(x) < q0 for x in qs):
        raise ValueError(f"every sweep point needs |q| >= q0 = {q0}")
    if data == "homogeneous" and g is None:
        g = random_boundary_data(grid, spec.m, seed)
    for q in qs:
        if data == "homogeneous":
            u = solve_homogeneous(spec, q, g)
            rows += estimate_terms(spec, q, u, g, None, p, which)
        elif data == "manufactured":
            mm = manufactured_solution(spec, q, grid, seed=seed)
            rows += estimate_terms(spec, q, mm.u, mm.g, mm.f, p, which)
        else:
            raise ValueError(f"unknown data family {data!r}")
    return EstimateReport(spec.name, data, rows)


def interpolation_ratio(g_ext: GridField, j: int, m: int, q: complex, p: float = 2.0) -> float:
    """``(||g~||_{2m-j+1} + |q|^m ||g~||_{m-j+1}) / [[g~]]_{2m-j+1}`` for ``1 <= j <= m``."""
    if not 1 <= j <= m:
        raise ValueError("j must lie in 1..m")
    lhs = sobolev_norm(g_ext, 2 * m - j + 1, p) + abs(q) ** m * sobolev_norm(g_ext, m - j + 1, p)
    rhs = param_norm(g_ext, 2 * m - j + 1, p, m=m, q=q)
    return float(np.sum(lhs) / np.sum(rhs))
