"""Command-line harness: configuration, verification suites and CSV reports.

Configuration is an INI file (``[section]`` headers, ``key = value`` lines).
Every key has a default, so an empty file is valid.  Exit codes: 0 success,
1 a verdict failed, 2 the configuration could not be parsed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimates as est
from .grids import GridSpec, load_field_csv, save_field_csv
from .halfspace import manufactured_solution, oracle_error, solve_full
from .multipliers import M2_matrices, MichlinGrid, estimate_lambda0, family, michlin_scan
from .ode_core import basic_solutions, coupling_set, residue_Y, wronskian_det
from .symbols import (PRESETS, Covariable, ProblemSpec, check_ellipticity, check_N_ellipticity,
                      n_ellipticity_grid)


class ConfigError(ValueError):
    """A configuration key is missing a valid value."""


# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "spec": {"preset": ("str", "laplace_heat"), "m": ("int", None), "n": ("int", 2),
             "theta": ("float", float(np.pi / 2)), "a1": ("str", ""), "a2": ("str", ""),
             "name": ("str", "custom")},
    "grid": {"L": ("float", float(2 * np.pi)), "N": ("int", 32), "X": ("float", None),
             "panels": ("int", 40), "h0": ("float", 1e-4), "order": ("int", 12), "rule": ("str", "gauss")},
    "sweep": {"q_min": ("float", 1.0), "q_max": ("float", 100.0), "q_count": ("int", 9),
              "q_values": ("floats", None), "q_arg": ("float", 0.0), "q0": ("float", 1.0)},
    "suites": {"check": ("bool", True), "fundamental": ("bool", True), "michlin": ("bool", True),
               "estimates": ("bool", True), "solve": ("bool", True), "oracle": ("bool", True)},
    "tolerances": {"ellipticity": ("float", 1e-10), "route": ("float", 1e-11), "refinement": ("float", 0.10),
                   "plateau": ("float", 4.0), "residual": ("float", 1e-8), "oracle": ("float", 1e-6),
                   "homogeneity": ("float", 1e-11)},
    "output": {"dir": ("str", "ellparab_out")},
    "run": {"seed": ("int", 0), "p": ("float", 2.0)},
    "fundamental": {"xi_prime": ("floats", [3.0]), "q": ("complex", 4.0),
                    "x_samples": ("floats", [0.0, 0.1, 0.5, 1.0, 2.0])},
    "michlin": {"families": ("strs", None), "shell_lo": ("int", -4), "shell_hi": ("int", 4),
                "q_lo": ("int", -6), "q_hi": ("int", 8), "rays": ("int", 3), "directions": ("int", 4)},
    "estimates": {"data": ("str", "homogeneous"), "inequalities": ("strs", list(est.INEQUALITIES))},
    "solve": {"f": ("str", ""), "g": ("str", ""), "manufactured": ("bool", True), "q": ("complex", 10.0),
              "mode": ("str", "blind"), "oracle": ("bool", False)},
    "oracle": {"xi_prime": ("floats", [1.0]), "q": ("complex", 1.0), "h": ("complexes", None),
               "step": ("float", 1e-3)},
}


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "complex":
        return complex(raw.replace(" ", ""))
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    items = [t for t in raw.replace(",", " ").split() if t]
    if kind == "floats":
        return [float(t) for t in items]
    if kind == "complexes":
        return [complex(t) for t in items]
    if kind == "strs":
        return items
    raise AssertionError(kind)


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and "=" in s and s.split("=", 1)[0].strip().lower() == key.lower():
            return i
    return None


@dataclass
class RunConfig:
    values: dict[str, dict[str, object]]
    path: str | None = None
    extras: dict = field(default_factory=dict)
    lines: dict[tuple[str, str], int] = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict[str, object]:
        return self.values[section]

    def where(self, section: str, key: str) -> str:
        line = self.lines.get((section, key))
        return f"{section}.{key} (line {line})" if line else f"{section}.{key} (default)"

    def bad(self, section: str, key: str, why: str) -> "ConfigError":
        return ConfigError(f"bad value for {self.where(section, key)}: {why}")


def load_config(path: str | None) -> RunConfig:
    """Parse ``path`` (or defaults when ``None``), raising :class:`ConfigError` with the key and line."""
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=path or "<defaults>")
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    values: dict[str, dict[str, object]] = {}
    for section, keys in SCHEMA.items():
        values[section] = {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in keys.items()}
    lower = {sec: {k.lower(): k for k in keys} for sec, keys in SCHEMA.items()}
    lines: dict[tuple[str, str], int] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}] (line {_line_of_section(text, section)})")
        for key, raw in parser.items(section):
            canon = lower[section].get(key.lower())
            line = _line_of(text, section, key)
            if canon is None:
                raise ConfigError(f"unknown key {section}.{key} (line {line})")
            kind = SCHEMA[section][canon][0]
            lines[(section, canon)] = line
            try:
                values[section][canon] = _convert(kind, raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{canon} (line {line}): {exc}") from exc
    return RunConfig(values, path, lines=lines)


def _line_of_section(text: str, section: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return i
    return None


def _parse_coefficients(raw: str, n: int, with_k: bool, key: str) -> dict:
    """``"2 0 : 1; 0 2 : 1"`` (``a1``) or ``"2 0 | 0 : 1; 0 0 | 2 : 1"`` (``a2``)."""
    out = {}
    for entry in [e for e in raw.split(";") if e.strip()]:
        try:
            lhs, coef = entry.split(":")
            if with_k:
                alpha_s, k_s = lhs.split("|")
                alpha = tuple(int(t) for t in alpha_s.split())
                idx = (alpha, int(k_s))
            else:
                alpha = tuple(int(t) for t in lhs.split())
                idx = alpha
            if len(alpha) != n:
                raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected n={n}")
            out[idx] = complex(coef.strip().replace(" ", ""))
        except ValueError as exc:
            raise ConfigError(f"bad value for spec.{key}: entry {entry.strip()!r}: {exc}") from exc
    return out


def build_spec(cfg: RunConfig) -> ProblemSpec:
    s = cfg["spec"]
    if not 0 <= s["theta"] < np.pi:
        raise cfg.bad("spec", "theta", f"{s['theta']} is outside [0, pi)")
    if s["n"] < 2:
        raise cfg.bad("spec", "n", f"{s['n']} is below 2")
    if s["m"] is not None and s["m"] < 1:
        raise cfg.bad("spec", "m", f"{s['m']} is below 1")
    try:
        if s["a1"] or s["a2"]:
            n = int(s["n"])
            if s["m"] is None:
                raise ConfigError("spec.m is required with explicit coefficients")
            return ProblemSpec(int(s["m"]), n, float(s["theta"]), _parse_coefficients(s["a1"], n, False, "a1"),
                               _parse_coefficients(s["a2"], n, True, "a2"), name=str(s["name"]))
        preset = str(s["preset"])
        if preset not in PRESETS:
            raise ConfigError(f"bad value for spec.preset: {preset!r} (choose from {sorted(PRESETS)})")
        return PRESETS[preset](n=int(s["n"]), theta=float(s["theta"]))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid spec block: {exc}") from exc


def build_grid(cfg: RunConfig) -> GridSpec:
    g = cfg["grid"]
    if g["N"] < 2 or g["N"] & (g["N"] - 1):
        raise cfg.bad("grid", "N", f"{g['N']} is not a power of 2")
    if g["rule"] not in ("gauss", "trapezoid"):
        raise cfg.bad("grid", "rule", f"{g['rule']!r} is neither 'gauss' nor 'trapezoid'")
    for key in ("L", "h0", "X"):
        if g[key] is not None and g[key] <= 0:
            raise cfg.bad("grid", key, f"{g[key]} must be positive")
    try:
        return GridSpec.graded(L=g["L"], N=g["N"], n=int(cfg["spec"]["n"]), X=g["X"], h0=g["h0"],
                               panels=g["panels"], order=g["order"], rule=g["rule"])
    except ValueError as exc:
        raise ConfigError(f"invalid grid block: {exc}") from exc


def sweep_values(cfg: RunConfig) -> np.ndarray:
    s = cfg["sweep"]
    mods = np.array(s["q_values"]) if s["q_values"] else np.geomspace(s["q_min"], s["q_max"], s["q_count"])
    return mods * np.exp(1j * s["q_arg"])


# ---------------------------------------------------------------------------
# output helpers


def _write(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


class _Ctx:
    def __init__(self, cfg: RunConfig, out: Path, seed: int, p: float, force: bool, refine: bool):
        self.cfg, self.out, self.seed, self.p, self.force, self.refine = cfg, out, seed, p, force, refine
        self.spec = build_spec(cfg)
        self.tol = cfg["tolerances"]

    def say(self, msg: str) -> None:
        print(msg)


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(ctx: _Ctx) -> int:
    spec = ctx.spec
    rep = check_ellipticity(spec, tol=ctx.tol["ellipticity"])
    xis, lams = n_ellipticity_grid(spec.n, 64, 1e3, 40, spec.theta, 5 if spec.theta > 0 else 1)
    cn = check_N_ellipticity(spec, xis, lams)
    rows = [[r["quantity"], r["value"], r["location"]] for r in rep.rows()]
    rows.append(["C_N", cn, ""])
    _write(ctx.out / "ellipticity.csv", ["quantity", "value", "location"], rows)
    _write(ctx.out / "ellipticity_failures.csv", ["failure"], [[f] for f in rep.failures])
    ok = rep.passed and cn > ctx.tol["ellipticity"]
    ctx.say(f"check {spec.name}: min|A1|={rep.min_A1:.6g} min|A2|={rep.min_A2:.6g} C_N={cn:.6g} "
            f"-> {'PASS' if ok else 'FAIL'}")
    for f in rep.failures[:5]:
        ctx.say(f"  {f}")
    return 0 if ok else 1


def _gate(ctx: _Ctx) -> int:
    if ctx.force:
        return 0
    rep = check_ellipticity(ctx.spec, tol=ctx.tol["ellipticity"])
    if not rep.passed:
        ctx.say(f"{ctx.spec.name} fails the ellipticity check ({rep.failures[0]}); rerun with --force to proceed")
        return 1
    return 0


def cmd_fundamental(ctx: _Ctx) -> int:
    spec, fc = ctx.spec, ctx.cfg["fundamental"]
    cov = Covariable(fc["xi_prime"], fc["q"])
    if cov.xi_norm == 0:
        ctx.say("fundamental needs xi' != 0")
        return 1
    Y = basic_solutions(spec, cov)
    cs = coupling_set(Y, cov)
    rows = []
    for which, split in (("A1", Y.split1), ("A2", Y.split2)):
        for side, roots in (("plus", split.roots_plus), ("minus", split.roots_minus)):
            rows += [[which, side, *_cx(z)] for z in roots]
    _write(ctx.out / "roots.csv", ["symbol", "half_plane", "re", "im"], rows)

    x = np.array(fc["x_samples"], dtype=float)
    m = spec.m
    rows = []
    worst = 0.0
    for kind, sols, split in (("Y1", Y.Y1, Y.split1), ("Y2", Y.Y2, Y.split2)):
        res = residue_Y(split, m, x, kind)
        for k in range(m):
            direct = sols[k](x)
            for xi_, a, b in zip(x, direct, res[k]):
                err = abs(a - b) / max(abs(a), 1e-300)
                worst = max(worst, abs(a - b) / max(np.max(np.abs(direct)), 1e-300))
                rows.append([kind, k + 1, xi_, *_cx(a), *_cx(b), err])
    _write(ctx.out / "Y_samples.csv", ["kind", "column", "x_n", "vandermonde_re", "vandermonde_im",
                                        "residue_re", "residue_im", "rel_diff"], rows)
    rows = [[i + 1, j + 1, *_cx(cs.psi[i, j]), *_cx(cs.psi_schur[i, j]), abs(cs.psi[i, j] - cs.psi_schur[i, j])]
            for i in range(2 * m) for j in range(2 * m)]
    _write(ctx.out / "psi.csv", ["row", "col", "direct_re", "direct_im", "schur_re", "schur_im", "route_diff"], rows)
    rows = [[i + 1, j + 1, *_cx(cs.s[i, j])] for i in range(m) for j in range(m)]
    _write(ctx.out / "S.csv", ["row", "col", "re", "im"], rows)
    det = wronskian_det(spec, cov)
    _write(ctx.out / "wronskian.csv", ["det_re", "det_im", "abs_det"], [[*_cx(det), abs(det)]])
    ok = cs.route_error <= ctx.tol["route"] and worst <= 1e-8 and abs(det) > 0
    ctx.say(f"fundamental at xi'={cov.xi_prime.tolist()}, q={cov.q}: Psi route diff {cs.route_error:.3g}, "
            f"Y route diff {worst:.3g}, |det W|={abs(det):.6g} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_michlin(ctx: _Ctx) -> int:
    spec, mc = ctx.spec, ctx.cfg["michlin"]
    names = mc["families"] or [f"M1_{l}" for l in range(2 * spec.m + 1)] + ["C1", "C2", "M2", "M2_tilde"]
    grid = MichlinGrid.dyadic(spec.n, spec.q_angle, mc["shell_lo"], mc["shell_hi"], mc["q_lo"], mc["q_hi"],
                              mc["rays"], mc["directions"])
    summary = []
    ok = True
    for name in names:
        try:
            fn = family(spec, name)
        except KeyError as exc:
            raise ConfigError(f"bad value for michlin.families: {exc}") from exc
        rep = michlin_scan(fn, spec.n, grid, name, refine=ctx.refine,
                           refined_func=family(spec, name, refined=True))
        _write(ctx.out / f"michlin_{name}.csv", ["xi_norm", "direction", "q_abs", "q_arg_index", "order", "sup"],
               [[r["xi_norm"], r["direction"], r["q_abs"], r["q_arg"], r["order"], r["sup"]] for r in rep.rows])
        ratio = rep.refinement_ratio
        passed = rep.consistent and (ratio is None or ratio <= ctx.tol["refinement"])
        ok &= passed
        summary.append([name, rep.constant, rep.refined_constant if rep.refined_constant is not None else "",
                        ratio if ratio is not None else "", passed])
        ctx.say(f"  {name}: constant {rep.constant:.6g}" + (f", refinement change {ratio:.3%}" if ratio is not None
                                                              else ""))
    # degree-0 homogeneity of M2 at a fixed sample
    cov = Covariable(np.full(spec.n - 1, 0.7), 1.3 * np.exp(0.5j * spec.q_angle))
    base = M2_matrices(spec, cov).M2
    hom = max(float(np.max(np.abs(M2_matrices(spec, cov.scaled(1 / r)).M2 - base))) for r in (0.1, 10.0, 1e3))
    lam0, rows = estimate_lambda0(spec)
    sinv = max((r["S_inv_norm"] for r in rows if lam0 is not None and r["ratio"] >= lam0), default=float("nan"))
    summary.append(["M2_homogeneity", hom, "", "", hom <= ctx.tol["homogeneity"]])
    summary.append(["Lambda0", lam0 if lam0 is not None else "", "", "", lam0 is not None])
    summary.append(["S_inv_max_beyond_Lambda0", sinv, "", "", bool(sinv <= 2.0)])
    ok &= hom <= ctx.tol["homogeneity"] and lam0 is not None and sinv <= 2.0
    _write(ctx.out / "michlin_summary.csv", ["family", "constant", "refined_constant", "refinement_ratio", "pass"],
           summary)
    ctx.say(f"michlin-scan {spec.name}: homogeneity {hom:.3g}, Lambda0={lam0}, max|S^-1|={sinv:.4g} -> "
            f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _estimate_verdict(rep: est.EstimateReport, plateau: float) -> bool:
    ok = True
    for w in rep.inequalities():
        if w == "strengthened":
            continue
        q, r = rep.series(w)
        upper = r[np.argsort(np.abs(q), kind="stable")][len(r) // 2:]
        # a ratio that only decreases over the upper half cannot hide a missing uniform constant
        ok &= rep.plateau_factor(w) <= plateau or bool(np.all(np.diff(upper) <= 0))
    return ok


def cmd_estimates(ctx: _Ctx) -> int:
    spec, ec = ctx.spec, ctx.cfg["estimates"]
    grid = build_grid(ctx.cfg)
    qs = sweep_values(ctx.cfg)
    which = tuple(ec["inequalities"])
    bad = [w for w in which if w not in est.INEQUALITIES]
    if bad:
        raise ConfigError(f"bad value for estimates.inequalities: {bad}")
    try:
        rep = est.estimate_sweep(spec, grid, qs, ec["data"], ctx.p, ctx.seed, which, ctx.cfg["sweep"]["q0"])
    except ValueError as exc:
        if "q0" in str(exc) or "data family" in str(exc):
            raise ConfigError(str(exc)) from exc
        raise
    rep.write_csv(ctx.out)
    ok = _estimate_verdict(rep, ctx.tol["plateau"])
    for s in rep.summary():
        ctx.say(f"  {s['inequality']}: max ratio {s['max_ratio']:.4g}, plateau {s['plateau_factor']:.3g}, "
                f"growth {s['growth']:.3g}")
    if ctx.refine:
        rep2 = est.estimate_sweep(spec, grid.with_N(2 * grid.N), qs, ec["data"], ctx.p, ctx.seed, which,
                                  ctx.cfg["sweep"]["q0"])
        rows = []
        for w in rep.inequalities():
            a, b = rep.max_ratio(w), rep2.max_ratio(w)
            change = abs(b - a) / a
            rows.append([w, a, b, change])
            ok &= change <= ctx.tol["refinement"]
        _write(ctx.out / "estimates_refinement.csv", ["inequality", "max_ratio_N", "max_ratio_2N", "change"], rows)
    ctx.say(f"estimates {spec.name}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_solve(ctx: _Ctx) -> int:
    spec, sc = ctx.spec, ctx.cfg["solve"]
    grid = build_grid(ctx.cfg)
    q = sc["q"]
    known = None
    if sc["f"] or sc["g"]:
        if not (sc["f"] and sc["g"]):
            raise ConfigError("solve.f and solve.g must be given together")
        f, g = load_field_csv(sc["f"]), load_field_csv(sc["g"])
        if f.data.shape[1:] != (grid.tangential_shape + (grid.nx,)) or f.grid.N != grid.N:
            ctx.say("input fields do not match the configured grid; using the grid stored in the files")
        grid = f.grid
    elif sc["manufactured"]:
        mm = manufactured_solution(spec, q, grid, seed=ctx.seed)
        f, g, known = mm.f, mm.g, mm.u
    else:
        raise ConfigError("solve needs solve.f/solve.g or solve.manufactured = true")
    mode = sc["mode"]
    if mode not in ("blind", "a_posteriori"):
        raise ConfigError(f"bad value for solve.mode: {mode!r}")
    sol = solve_full(spec, q, f, g, mode=mode, u_known=known)
    ctx.out.mkdir(parents=True, exist_ok=True)
    for name, fld in (("u", sol.u), ("v", sol.v), ("w", sol.w)):
        save_field_csv(fld, ctx.out / f"{name}.csv")
    rows = [["residual_interior", sol.residual_interior], ["residual_boundary", sol.residual_boundary],
            ["removed_mean_f", sol.removed_mean_f], ["removed_mean_g", sol.removed_mean_g]]
    ok = sol.residual_interior <= ctx.tol["residual"] and sol.residual_boundary <= ctx.tol["residual"]
    if known is not None:
        err = float(np.max(np.abs(sol.u.data - known.data)) / np.max(np.abs(known.data)))
        rows.append(["recovery_error", err])
        ok &= err <= 1e-5
    _write(ctx.out / "solve_report.csv", ["quantity", "value"], rows)
    if sc["oracle"]:
        ok &= _solve_oracle_table(ctx, sol, grid, q)
    ctx.say(f"solve {spec.name} ({mode}): residuals {sol.residual_interior:.3g} / {sol.residual_boundary:.3g} -> "
            f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _solve_oracle_table(ctx: _Ctx, sol, grid: GridSpec, q: complex) -> bool:
    """Per-frequency comparison of the homogeneous part against the finite-difference oracle.

    The step is ``oracle.step * min(1, 2 / rho)``: every mode gets at least
    the resolution, in units of its own decay scale, of the reference
    covariable ``xi' = 1, q = 1`` (``rho = 2``).
    """
    spec = ctx.spec
    m = spec.m
    xi = grid.xi_grid()
    rows = []
    traces = np.array([sol.w.trace(k) for k in range(2 * m)])  # (2m, 2, N..)
    hats = np.fft.fftn(traces, axes=tuple(range(2, 2 + grid.d)), norm="forward")
    amp = np.max(np.abs(hats), axis=(0, 1))
    ok = True
    for idx in np.argsort(-amp, axis=None)[:4]:
        mi = np.unravel_index(idx, amp.shape)
        if amp[mi] == 0 or not np.any(xi[mi]):
            continue
        # jump data of the mode: D_n^{k} (u1 - u2~) at 0, with D_n = -i d/dx and u2~(x) = u2(-x)
        h = np.array([(-1j) ** k * (hats[(k, 0) + mi] - (-1) ** k * hats[(k, 1) + mi]) for k in range(2 * m)])
        cov = Covariable(xi[mi], q)
        step = ctx.cfg["oracle"]["step"] * min(1.0, 2.0 / cov.rho)
        err = oracle_error(spec, cov, h, step)
        rows.append([*xi[mi], step, err])
        ok &= err <= ctx.tol["oracle"]
    _write(ctx.out / "solve_oracle.csv", [f"xi_{i + 1}" for i in range(grid.d)] + ["step", "rel_error"], rows)
    return ok


def cmd_oracle(ctx: _Ctx) -> int:
    spec, oc = ctx.spec, ctx.cfg["oracle"]
    h = oc["h"] or [1.0] + [0.0] * (2 * spec.m - 1)
    if len(h) != 2 * spec.m:
        raise ConfigError(f"bad value for oracle.h: need {2 * spec.m} entries")
    step = oc["step"]
    rows = []
    ok = True
    for xi in np.atleast_1d(oc["xi_prime"]):
        cov = Covariable(xi * np.eye(spec.n - 1)[0], oc["q"])
        errs = [oracle_error(spec, cov, h, s) for s in (step, step / 2)]
        order = float(np.log2(errs[0] / errs[1]))
        rows.append([xi, *_cx(oc["q"]), step, errs[0], errs[1], order])
        ok &= errs[0] <= ctx.tol["oracle"] and order > 1.8
        ctx.say(f"  xi'={xi}: rel err {errs[0]:.3g} (step {step}), {errs[1]:.3g} (step {step / 2}), order {order:.2f}")
    _write(ctx.out / "oracle.csv", ["xi_prime", "q_re", "q_im", "step", "rel_error", "rel_error_half", "order"], rows)
    ctx.say(f"oracle-compare {spec.name}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


COMMANDS = {"check": cmd_check, "fundamental": cmd_fundamental, "michlin-scan": cmd_michlin,
            "estimates": cmd_estimates, "solve": cmd_solve, "oracle-compare": cmd_oracle}
GATED = {"fundamental", "michlin-scan", "estimates", "solve", "oracle-compare"}
SUITE_KEYS = {"check": "check", "fundamental": "fundamental", "michlin-scan": "michlin",
              "estimates": "estimates", "solve": "solve", "oracle-compare": "oracle"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ellparab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=list(COMMANDS) + ["run"],
                    help="suite to run; 'run' executes every suite enabled in [suites]")
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    ap.add_argument("--force", action="store_true", help="run even if the ellipticity check fails")
    ap.add_argument("--p", type=float, help="Lebesgue exponent (overrides run.p)")
    ap.add_argument("--refine", action="store_true", help="add refinement passes (Michlin grid, N doubling)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.p is not None and not args.p > 1:
            raise ConfigError("--p must exceed 1")
        out = Path(args.out or cfg["output"]["dir"])
        seed = cfg["run"]["seed"] if args.seed is None else args.seed
        p = cfg["run"]["p"] if args.p is None else args.p
        ctx = _Ctx(cfg, out, seed, p, args.force, args.refine)
        commands = ([c for c in COMMANDS if cfg["suites"][SUITE_KEYS[c]]] if args.command == "run"
                    else [args.command])
        if any(c in GATED for c in commands) and "check" not in commands and _gate(ctx):
            return 1
        status = 0
        check_failed = False
        for c in commands:
            if c in GATED and check_failed and not ctx.force:
                ctx.say(f"skipping {c}: the ellipticity check failed")
                continue
            code = COMMANDS[c](ctx)
            check_failed |= c == "check" and code != 0
            status = max(status, code)
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
