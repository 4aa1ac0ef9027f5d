"""Scenario configs, the scenario runner and the ``solab`` command line.

A scenario is an INI file with four sections::

    [soliton]
    name = gaussian          # or cap_projected, flat; or: import = table.txt
    n = 3

    [flow]
    kind = normalized        # normalized | background | none
    rho0 = 1.5               # or f-minimal
    s_max = 40
    grid_step = 0.001

    [checks]
    run = monotonicity, limit

    [output]
    dir = out/gaussian

Unknown sections or keys are rejected before anything is computed.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .convergence_analyzer import (
    f_minimal_roots,
    l_length,
    limit_extraction,
    reduced_distance,
    reduced_distance_limit_check,
    RadialPath,
    write_path_table,
)
from .errors import ParseError, SolabError, UnknownName, ValidationError
from .flow_engine import (
    StepControl,
    run_background_flow,
    run_normalized_flow,
    type_one_ratio,
    write_trajectory_csv,
)
from .monotonicity_lab import (
    DECADE,
    half_weight_bound,
    huisken_functional,
    second_derivative_bound,
    tail_sup,
    verify_monotonicity,
)
from .report import CertificationReport, fmt
from .soliton_forge import (
    BUILTIN_NAMES,
    builtin_solitons,
    export_soliton_table,
    import_soliton_table,
)

__all__ = ["Scenario", "CHECK_NAMES", "parse_config", "run_scenario", "list_presets",
           "load_preset", "main"]

CHECK_NAMES = ("residuals", "monotonicity", "half_weight", "second_derivative",
               "type_one", "limit", "reduced_distance")
FLOW_CHECKS = {"monotonicity", "half_weight", "second_derivative", "type_one", "limit"}

_KEYS = {
    "soliton": {"name", "import", "n", "t", "eps", "lambda_mode", "w_anchor", "w_slope"},
    "flow": {"kind", "rho0", "root_bracket", "s_max", "t_max", "rtol", "atol", "max_step",
             "grid_step", "rho_floor", "rho_ceiling"},
    "checks": {"run", "residual_tol", "limit_tol", "tail_tol", "rd_q1", "rd_t1", "rd_q2",
               "rd_t2", "rd_nodes", "rd_expected", "rd_tol", "probe_q", "probe_times",
               "probe_base", "probe_nodes"},
    "output": {"dir"},
}


@dataclass
class Scenario:
    """A validated scenario.

    Attributes
    ----------
    name : str
    soliton_spec : dict
        ``{"name": ..., params...}`` or ``{"import": path}``.
    flow_spec : dict
        ``kind`` plus initial radius, horizon and step-control settings.
    checks : list of str
    check_params : dict
    output_dir : Path
    """

    name: str
    soliton_spec: dict
    flow_spec: dict
    checks: list
    check_params: dict = field(default_factory=dict)
    output_dir: Path = Path("solab-out")


# ----------------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------------

def _number(sec: dict, key: str, default=None, kind=float):
    if key not in sec:
        return default
    raw = sec[key]
    try:
        value = kind(raw)
    except ValueError:
        raise ValidationError(key, f"not a valid {kind.__name__}: {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise ValidationError(key, "must be finite")
    return value


def _numbers(sec: dict, key: str, count: int | None = None):
    if key not in sec:
        return None
    try:
        vals = [float(v) for v in sec[key].split(",") if v.strip()]
    except ValueError:
        raise ValidationError(key, f"not a list of numbers: {sec[key]!r}") from None
    if count is not None and len(vals) != count:
        raise ValidationError(key, f"expected {count} numbers")
    return vals


def _read_ini(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(strict=True, interpolation=None,
                                   inline_comment_prefixes=("#",), comment_prefixes=("#", ";"),
                                   default_section="__defaults__")
    try:
        cp.read_string(text)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(str(exc).splitlines()[0], exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any section", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    return cp


def parse_config(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate a scenario config.

    Raises
    ------
    ParseError
        Syntax problems, with the offending line number.
    ValidationError
        Unknown sections or keys and out-of-range values, naming the key.
    """
    cp = _read_ini(text)
    for section in cp.sections():
        if section not in _KEYS:
            raise ValidationError(section, "unknown section")
        for key in cp[section]:
            if key not in _KEYS[section]:
                raise ValidationError(key, f"unknown key in [{section}]")
    sec = {s: dict(cp[s]) if cp.has_section(s) else {} for s in _KEYS}

    # [soliton]
    so = sec["soliton"]
    if "import" in so and "name" in so:
        raise ValidationError("import", "give either name or import, not both")
    if "import" in so:
        soliton_spec = {"import": so["import"]}
        c = None
        T = None
    else:
        sname = so.get("name", "gaussian")
        if sname not in BUILTIN_NAMES:
            raise ValidationError("name", f"unknown soliton {sname!r}")
        soliton_spec = {"name": sname}
        n = _number(so, "n", 3, int)
        if n < 3:
            raise ValidationError("n", "dimension must be >= 3")
        soliton_spec["n"] = n
        T = _number(so, "t", 1.0)
        if not T > 0:
            raise ValidationError("T", "must be positive")
        soliton_spec["T"] = T
        cap_only = {"eps", "lambda_mode", "w_anchor", "w_slope"} & set(so)
        if sname != "cap_projected" and cap_only:
            raise ValidationError(sorted(cap_only)[0], f"not a parameter of {sname}")
        if sname == "cap_projected":
            eps = _number(so, "eps", 0.5)
            if not 0.0 < eps < 1.0:
                raise ValidationError("eps", "must lie in (0, 1)")
            mode = so.get("lambda_mode", "quadratic")
            if mode not in ("quadratic", "consistent"):
                raise ValidationError("lambda_mode", "must be quadratic or consistent")
            anchor = _numbers(so, "w_anchor", 2) or [1.0, 0.0]
            soliton_spec.update(eps=eps, lambda_mode=mode, w_anchor=tuple(anchor),
                                w_slope=_number(so, "w_slope", 1.0))
        c = 0 if sname == "flat" else 1

    # [flow]
    fl = sec["flow"]
    kind = fl.get("kind", "none")
    if kind not in ("normalized", "background", "none"):
        raise ValidationError("kind", "must be normalized, background or none")
    flow_spec: dict = {"kind": kind}
    if kind != "none":
        rho0 = fl.get("rho0")
        if rho0 is None:
            raise ValidationError("rho0", "required for a flow")
        if rho0 == "f-minimal":
            flow_spec["rho0"] = "f-minimal"
            flow_spec["root_bracket"] = tuple(_numbers(fl, "root_bracket", 2) or (0.05, 10.0))
        else:
            flow_spec["rho0"] = _number(fl, "rho0")
            if not flow_spec["rho0"] > 0:
                raise ValidationError("rho0", "must be positive")
        if kind == "normalized":
            if "t_max" in fl:
                raise ValidationError("t_max", "normalized flows use s_max")
            flow_spec["s_max"] = _number(fl, "s_max", 40.0)
            start = 0.0 if T is None or c == 0 else -math.log(T)
            if not flow_spec["s_max"] > start:
                raise ValidationError("s_max", "must exceed the start time")
        else:
            if "s_max" in fl:
                raise ValidationError("s_max", "background flows use t_max")
            if "t_max" not in fl:
                raise ValidationError("t_max", "required for a background flow")
            t_max = _number(fl, "t_max")
            if not t_max > 0 or (c == 1 and T is not None and t_max >= T):
                raise ValidationError("t_max", "must lie in (0, T)")
            flow_spec["t_max"] = t_max
        defaults = StepControl()
        ctrl = {}
        for key in ("rtol", "atol", "max_step", "rho_floor", "rho_ceiling"):
            ctrl[key] = _number(fl, key, getattr(defaults, key))
            if not ctrl[key] > 0:
                raise ValidationError(key, "must be positive")
        ctrl["grid_step"] = _number(fl, "grid_step", None)
        if ctrl["grid_step"] is not None and not ctrl["grid_step"] > 0:
            raise ValidationError("grid_step", "must be positive")
        flow_spec["step"] = ctrl
    elif set(fl) - {"kind"}:
        raise ValidationError(sorted(set(fl) - {"kind"})[0], "no flow requested")

    # [checks]
    ch = sec["checks"]
    checks = [c.strip() for c in ch.get("run", "").split(",") if c.strip()]
    for check in checks:
        if check not in CHECK_NAMES:
            raise ValidationError("run", f"unknown check {check!r}")
    if len(set(checks)) != len(checks):
        raise ValidationError("run", "duplicate check")
    if kind == "none" and FLOW_CHECKS & set(checks):
        raise ValidationError("run", "flow checks need a flow")
    params: dict = {
        "residual_tol": _number(ch, "residual_tol", 1e-10),
        "limit_tol": _number(ch, "limit_tol", 1e-8),
        "tail_tol": _number(ch, "tail_tol", 1e-6),
    }
    rd_keys = {k for k in ch if k.startswith(("rd_", "probe_"))}
    if rd_keys and "reduced_distance" not in checks:
        raise ValidationError(sorted(rd_keys)[0], "only used by the reduced_distance check")
    if "reduced_distance" in checks:
        for key in ("rd_q1", "rd_t1", "rd_q2", "rd_t2"):
            if key not in ch:
                raise ValidationError(key, "required by reduced_distance")
            params[key] = _number(ch, key)
        if not 0 <= params["rd_t1"] < params["rd_t2"]:
            raise ValidationError("rd_t2", "need 0 <= rd_t1 < rd_t2")
        params["rd_nodes"] = _number(ch, "rd_nodes", 64, int)
        if params["rd_nodes"] < 8:
            raise ValidationError("rd_nodes", "must be >= 8")
        params["rd_expected"] = _number(ch, "rd_expected", None)
        params["rd_tol"] = _number(ch, "rd_tol", 1e-4)
        if "probe_times" in ch:
            if kind != "background":
                raise ValidationError("probe_times", "needs a background flow")
            params["probe_q"] = _number(ch, "probe_q", 1.0)
            params["probe_times"] = _numbers(ch, "probe_times")
            params["probe_base"] = ch.get("probe_base", "trajectory")
            if params["probe_base"] not in ("trajectory", "origin"):
                raise ValidationError("probe_base", "must be trajectory or origin")
            params["probe_nodes"] = _number(ch, "probe_nodes", 32, int)

    out = Path(sec["output"].get("dir", f"solab-out/{name}"))
    return Scenario(name, soliton_spec, flow_spec, checks, params, out)


# ----------------------------------------------------------------------------
# presets
# ----------------------------------------------------------------------------

PRESETS = {
    "gaussian-shrinker": (
        "Gaussian soliton, normalized flow from the f-minimal sphere rho = 2",
        """
[soliton]
name = gaussian
n = 3

[flow]
kind = normalized
rho0 = 2
s_max = 40
grid_step = 0.01

[checks]
run = residuals, monotonicity, half_weight, second_derivative, type_one, limit
""",
    ),
    "cap-halfheight": (
        "Stereographic spherical cap (eps = 1/2): flow from its f-minimal sphere",
        """
[soliton]
name = cap_projected
eps = 0.5
n = 3

[flow]
kind = normalized
rho0 = f-minimal
root_bracket = 0.1, 0.99
# the sphere is a repelling fixed point; keep the horizon short
s_max = 3
grid_step = 0.001

[checks]
run = monotonicity, half_weight, second_derivative, type_one, limit
""",
    ),
    "flat-extinction": (
        "Round sphere rho0 = 2 shrinking to a point in flat space (n = 3)",
        """
[soliton]
name = flat
n = 3

[flow]
kind = background
rho0 = 2
t_max = 2
grid_step = 0.001

[checks]
run = monotonicity, half_weight, second_derivative
""",
    ),
    "reduced-distance-flat": (
        "Reduced distance in flat space between (1, 0) and (0, 1)",
        """
[soliton]
name = flat
n = 3

[flow]
kind = none

[checks]
run = reduced_distance
rd_q1 = 1
rd_t1 = 0
rd_q2 = 0
rd_t2 = 1
rd_nodes = 64
rd_expected = 0.25
rd_tol = 1e-4
""",
    ),
    "gaussian-monotonicity": (
        "Gaussian soliton, normalized flow from rho0 = 1.5 until extinction",
        """
[soliton]
name = gaussian
n = 3

[flow]
kind = normalized
rho0 = 1.5
s_max = 40
grid_step = 0.001

[checks]
run = monotonicity, half_weight, second_derivative
""",
    ),
    "gaussian-type-one": (
        "Gaussian background flow of the self-shrinking sphere with reduced-distance probes",
        """
[soliton]
name = gaussian
n = 3

[flow]
kind = background
rho0 = 2
t_max = 0.99
grid_step = 0.001

[checks]
run = monotonicity, type_one, reduced_distance
rd_q1 = 1
rd_t1 = 0
rd_q2 = 0
rd_t2 = 0.75
rd_expected = 0.3333333333333333
probe_q = 1
probe_times = 0.5, 0.75, 0.9, 0.99
probe_base = origin
""",
    ),
}


def list_presets() -> list[tuple[str, str]]:
    """Preset names with one-line descriptions."""
    return [(name, desc) for name, (desc, _) in PRESETS.items()]


def load_preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise UnknownName(f"unknown preset {name!r}")
    return parse_config(PRESETS[name][1], name=name)


# ----------------------------------------------------------------------------
# running
# ----------------------------------------------------------------------------

def _build_soliton(spec: dict):
    if "import" in spec:
        return import_soliton_table(spec["import"])
    params = {k: v for k, v in spec.items() if k != "name"}
    return builtin_solitons(spec["name"], params)


def _run_flow(sol, spec: dict):
    ctrl = StepControl(**spec["step"])
    rho0 = spec["rho0"]
    if rho0 == "f-minimal":
        rho0 = f_minimal_roots(sol, spec["root_bracket"])[0]
    if spec["kind"] == "normalized":
        return run_normalized_flow(sol, rho0, (sol.s_start, spec["s_max"]), ctrl), rho0
    return run_background_flow(sol, rho0, (0.0, spec["t_max"]), ctrl), rho0


def _check_residuals(sol, traj, p) -> CertificationReport:
    d = sol.diagnostics
    worst = d.max()
    return CertificationReport("soliton_residuals", worst, p["residual_tol"],
                               worst <= p["residual_tol"], int(np.size(sol.grid)),
                               {"diag": d.diag, "offdiag": d.offdiag, "w_eq": d.w_eq,
                                "hamilton": d.hamilton,
                                "hamilton_constant": sol.hamilton_constant})


def _check_half_weight(sol, traj, p) -> CertificationReport:
    sup = half_weight_bound(traj)
    return CertificationReport("half_weight_bound", sup, math.inf, math.isfinite(sup),
                               len(traj.samples), {"sup": sup})


def _check_second_derivative(sol, traj, p) -> CertificationReport:
    sup = second_derivative_bound(traj)
    details = {"sup": sup}
    ok = math.isfinite(sup)
    s = traj.s_values
    if traj.termination == "reached_horizon" and s[-1] - s[0] >= DECADE:
        tail = tail_sup(traj)
        details["final_decade_sup"] = tail
        details["tail_tolerance"] = p["tail_tol"]
        ok = ok and tail <= p["tail_tol"]
    return CertificationReport("second_derivative_bound", sup, math.inf, ok,
                               len(traj.samples), details)


def _check_type_one(sol, traj, p) -> CertificationReport:
    ratio = type_one_ratio(traj)
    ok = math.isfinite(ratio) and traj.termination == "reached_horizon"
    return CertificationReport("type_one_ratio", ratio, math.inf, ok, len(traj.samples),
                               {"ratio": ratio, "termination": traj.termination})


def _check_limit(sol, traj, p) -> CertificationReport:
    v = limit_extraction(traj, tol=p["limit_tol"])
    return CertificationReport("f_minimal_limit", abs(v.defect_at_limit), 10 * p["limit_tol"],
                               v.converged, len(traj.samples),
                               {"limit_radius": v.limit_radius, "defect_at_limit": v.defect_at_limit,
                                "tail_variation": v.tail_variation, "reason": v.reason or "none"})


def _check_monotonicity(sol, traj, p) -> CertificationReport:
    return verify_monotonicity(traj)


def _check_reduced_distance(sol, traj, p, outdir: Path) -> list[tuple[str, CertificationReport]]:
    q = reduced_distance(sol, p["rd_q1"], p["rd_t1"], p["rd_q2"], p["rd_t2"], p["rd_nodes"])
    straight = RadialPath([p["rd_t1"], p["rd_t2"]], [p["rd_q1"], p["rd_q2"]], interp="t")
    bound = l_length(sol, straight) / (2 * math.sqrt(p["rd_t2"] - p["rd_t1"]))
    ok = q.converged and q.result <= bound + 1e-9
    details = {"ell": q.result, "straight_path_bound": bound, "converged": q.converged,
               "iterations": q.iterations, "grad_inf": q.grad_inf, "nodes": q.path_nodes,
               "path_class": "radial paths only"}
    disc = q.grad_inf
    tol = 1e-8
    if p.get("rd_expected") is not None:
        disc = abs(q.result - p["rd_expected"])
        tol = p["rd_tol"]
        details["expected"] = p["rd_expected"]
        ok = ok and disc <= tol
    write_path_table(q.minimizer, outdir / "minimizer_path.txt")
    out = [("reduced_distance", CertificationReport("reduced_distance", disc, tol, ok, q.path_nodes,
                                                    details))]
    if "probe_times" in p:
        rep = reduced_distance_limit_check(sol, traj, (p["probe_q"], p["probe_times"]),
                                           base=p["probe_base"], m_nodes=p["probe_nodes"])
        out.append(("reduced_distance_limit", rep))
    return out


_CHECKS = {
    "residuals": _check_residuals,
    "monotonicity": _check_monotonicity,
    "half_weight": _check_half_weight,
    "second_derivative": _check_second_derivative,
    "type_one": _check_type_one,
    "limit": _check_limit,
}


def _summary_facts(sol, traj, rho0) -> list[tuple[str, object]]:
    facts: list[tuple[str, object]] = [
        ("soliton", sol.name), ("n", sol.n), ("T", float(sol.T)), ("c", sol.c),
        ("provenance", sol.provenance),
    ]
    if sol.eps is not None:
        facts.append(("eps", float(sol.eps)))
    for r in (0.0, 1.0):
        if sol.lam.contains(r):
            facts.append((f"lambda_at_{int(r)}", float(sol.lam.value_at(r))))
        if sol.f.contains(r):
            facts.append((f"f_at_{int(r)}", float(sol.f.value_at(r))))
    if traj is not None:
        facts += [("flow", traj.kind), ("rho0", float(rho0)), ("samples", len(traj.samples)),
                  ("termination", traj.termination)]
        if traj.stop_time is not None:
            facts.append(("extinction_time" if traj.termination == "extinction" else "escape_time",
                          traj.stop_time))
        if traj.samples:
            facts.append(("rho_final", traj.samples[-1].rho))
            facts.append(("huisken_A_initial", huisken_functional(sol, traj.samples[0])))
            facts.append(("huisken_A_final", huisken_functional(sol, traj.samples[-1])))
    return facts


def run_scenario(scenario: Scenario, out_dir: Path | None = None) -> tuple[int, str]:
    """Run a scenario and write its artifacts.

    Writes ``trajectory.csv`` (when a flow is requested), ``report_<check>.txt``
    per check and ``summary.txt`` into the output directory.

    Returns
    -------
    (exit_status, summary_text)
        Status 0 when every check passes, 1 otherwise (including errors).
    """
    outdir = Path(out_dir) if out_dir is not None else Path(scenario.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = [f"scenario = {scenario.name}"]
    verdicts: list[tuple[str, bool]] = []
    error = None
    try:
        sol = _build_soliton(scenario.soliton_spec)
        traj, rho0 = (None, None)
        if scenario.flow_spec["kind"] != "none":
            traj, rho0 = _run_flow(sol, scenario.flow_spec)
            write_trajectory_csv(traj, outdir / "trajectory.csv")
        facts = _summary_facts(sol, traj, rho0)
        for check in scenario.checks:
            if check == "reduced_distance":
                reports = _check_reduced_distance(sol, traj, scenario.check_params, outdir)
            else:
                reports = [(check, _CHECKS[check](sol, traj, scenario.check_params))]
            for label, rep in reports:
                (outdir / f"report_{label}.txt").write_text(rep.to_text())
                verdicts.append((label, rep.verdict))
                if label == "limit" and rep.verdict:
                    facts.append(("limit_radius", rep.details["limit_radius"]))
                if label == "reduced_distance":
                    facts.append(("reduced_distance", rep.details["ell"]))
        lines += [f"{k} = {fmt(v)}" for k, v in facts]
    except SolabError as exc:
        error = f"{type(exc).__name__}: {exc}"
    lines += [f"check.{label} = {'PASS' if ok else 'FAIL'}" for label, ok in verdicts]
    passed = error is None and all(ok for _, ok in verdicts)
    if error is not None:
        lines.append(f"error = {error}")
    lines.append(f"verdict = {'PASS' if passed else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (outdir / "summary.txt").write_text(text)
    return (0 if passed else 1), text


# ----------------------------------------------------------------------------
# command line
# ----------------------------------------------------------------------------

def _load_target(target: str) -> Scenario:
    path = Path(target)
    if path.is_file():
        return parse_config(path.read_text(), name=path.stem)
    if target in PRESETS:
        return load_preset(target)
    raise UnknownName(f"{target!r} is neither a config file nor a preset")


def _run_one(args: tuple[Scenario, str | None]) -> tuple[str, int, str]:
    scenario, out = args
    outdir = None if out is None else Path(out) / scenario.name
    status, text = run_scenario(scenario, outdir)
    return scenario.name, status, text


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="solab", description="Radial soliton and sphere-flow laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run scenario configs or presets")
    run.add_argument("targets", nargs="+", metavar="config", help="config file or preset name")
    run.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    run.add_argument("--out", default=None, help="write artifacts to OUT/<scenario>")
    sub.add_parser("presets", help="list the built-in presets")
    exp = sub.add_parser("export-soliton", help="write a builtin soliton as a table")
    exp.add_argument("name", choices=BUILTIN_NAMES)
    exp.add_argument("path")
    exp.add_argument("--n", type=int, default=3)
    exp.add_argument("--eps", type=float, default=None)
    exp.add_argument("--lambda-mode", choices=("quadratic", "consistent"), default=None)
    exp.add_argument("--w-slope", type=float, default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2

    if args.command == "presets":
        for name, desc in list_presets():
            print(f"{name:24s} {desc}")
        return 0

    if args.command == "export-soliton":
        params: dict = {"n": args.n}
        if args.name == "cap_projected":
            for key, val in (("eps", args.eps), ("lambda_mode", args.lambda_mode),
                             ("w_slope", args.w_slope)):
                if val is not None:
                    params[key] = val
        elif any(v is not None for v in (args.eps, args.lambda_mode, args.w_slope)):
            print(f"error: cap options do not apply to {args.name}", file=sys.stderr)
            return 2
        try:
            export_soliton_table(builtin_solitons(args.name, params), args.path)
        except SolabError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(args.path)
        return 0

    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        scenarios = [_load_target(t) for t in args.targets]
    except (ParseError, ValidationError, UnknownName, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    work = [(s, args.out) for s in scenarios]
    if args.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, work))
    else:
        results = [_run_one(w) for w in work]
    worst = 0
    for name, status, text in results:
        verdict = "PASS" if status == 0 else "FAIL"
        print(f"{name}: {verdict}")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
