"""Command-line front end: ``parmonodromy <command> --input FILE [options]``.

Exit codes: 0 success, 1 verification failure or numerical error,
2 malformed input.  JSON output is written with sorted keys so that the same
input, options and seed give byte-identical files.
"""
from __future__ import annotations

import argparse
import ast
import itertools
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import jets
from .continuation import PathPlan, check_product_relation, monodromy_rep
from .errors import InvalidSystem, InvalidTarget, MaxIterationsExceeded, MonodromyError
from .normal_form import FuchsLocalSystem, local_solution
from .param_algebra import as_point, complex_to_json, parse_complex
from .rationality import SampledFunction, detect_rational_in_x, invariance_rationality_harness
from .rh_solver import RHTarget, random_fuchsian, rh_roundtrip_verify, rh_solve
from .systems import GaugeTransform, LinearSystem, apply_gauge, classify_singularity

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Anything wrong with the files or flags the user passed."""


@dataclass
class RunConfig:
    command: str
    input: str | None
    output: str
    tol: float = 1e-9
    trunc: int = 20
    grid: list | None = None
    witness: str | None = None
    seed: int = 0
    verify: bool = False
    format: str = "json"
    pole: int | None = None
    tol_fit: float = 1e-8
    max_iter: int = 50
    m_max: int = 8

    def validate(self):
        if not 1e-14 <= self.tol <= 1e-2:
            raise InputError(f"--tol {self.tol} outside [1e-14, 1e-2]")
        if self.trunc < 1:
            raise InputError("--trunc must be positive")
        if self.grid is not None and not self.grid:
            raise InputError("empty parameter grid")


# -- input helpers ------------------------------------------------------------
def _load_json(path):
    if path is None:
        raise InputError("--input is required for this command")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def parse_grid(value, r: int = 1) -> list:
    """Grid from a JSON value or string.

    Accepts a list of points (a point is a number or a list of coordinates,
    each coordinate a number or ``[re, im]``), a list of ``{start, stop,
    count}`` ranges (one per coordinate, combined as a product), or a
    comma-separated list of real numbers.
    """
    if isinstance(value, str):
        s = value.strip()
        try:
            value = json.loads(s)
        except json.JSONDecodeError:
            try:
                value = [float(v) for v in s.split(",") if v.strip()]
            except ValueError as exc:
                raise InputError(f"cannot parse grid {value!r}") from exc
    if isinstance(value, dict):
        value = [value]
    if not isinstance(value, list) or not value:
        raise InputError("grid must be a nonempty list")
    try:
        if all(isinstance(c, dict) for c in value):
            axes = [np.linspace(parse_complex(c["start"]), parse_complex(c["stop"]), int(c["count"])) for c in value]
            pts = [tuple(complex(v) for v in p) for p in itertools.product(*axes)]
        else:
            pts = []
            for p in value:
                if not isinstance(p, list):
                    p = [p]
                pts.append(tuple(parse_complex(c) for c in p))
        pts = [as_point(p, r) for p in pts]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad grid: {exc}") from exc
    if not pts:
        raise InputError("empty parameter grid")
    return pts


def _grid_for(cfg, data, r):
    if cfg.grid is not None:
        return parse_grid(cfg.grid, r)
    if isinstance(data, dict) and data.get("grid") is not None:
        return parse_grid(data["grid"], r)
    return [(0j,) * r]


def _load_system(cfg):
    data = _load_json(cfg.input)
    try:
        sys_data = data["system"] if "system" in data else data
        return LinearSystem.from_json(sys_data), data
    except InvalidSystem:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed system file: {type(exc).__name__}: {exc}") from exc


_FUNCS = {"exp": jets.exp, "log": jets.log, "sqrt": jets.sqrt}
_ALLOWED = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load, ast.Call, ast.Subscript,
    ast.Tuple, ast.Index if hasattr(ast, "Index") else ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def compile_expression(text: str, names):
    """Compile an arithmetic expression into a function of ``names``.

    Only numbers, the given names, + - * / ** (or ^), indexing and the
    functions exp, log and sqrt are allowed.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse expression {text!r}") from exc
    known = set(names) | set(_FUNCS) | {"I", "pi"}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise InputError(f"disallowed syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Name) and node.id not in known and not (node.id[0] == "t" and node.id[1:].isdigit()):
            raise InputError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise InputError(f"only exp, log and sqrt may be called in {text!r}")
    code = compile(tree, "<expression>", "eval")

    def fn(*args):
        env = dict(_FUNCS, I=1j, pi=math.pi)
        env.update(zip(names, args))
        if "t" in names:
            t = env["t"]
            tt = as_point(t) if not isinstance(t, tuple) else t
            env.update({f"t{k + 1}": c for k, c in enumerate(tt)})
            env["t"] = tt[0]
        return eval(code, {"__builtins__": {}}, env)

    return fn


# -- commands -----------------------------------------------------------------
def cmd_classify(cfg) -> tuple[int, dict]:
    sys_, data = _load_system(cfg)
    grid = _grid_for(cfg, data, sys_.r)
    witness = None
    if cfg.witness:
        try:
            witness = GaugeTransform.from_json(_load_json(cfg.witness)).P
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed witness file: {exc}") from exc
    poles = range(len(sys_.poles)) if cfg.pole is None else [cfg.pole]
    report = []
    for t in grid:
        sys_.check_distinct_at(t)
        entries = []
        for i in poles:
            alpha = sys_.poles[i].alpha.eval(t)
            kind = classify_singularity(sys_, i, t, witness)
            entries.append({"pole": i, "location": complex_to_json(alpha), "order": sys_.poles[i].order,
                            "kind": kind.value})
        report.append({"t": [complex_to_json(c) for c in t], "poles": entries})
    return EXIT_OK, {"command": "classify", "grid": report}


def _local_residual(sol, A, radius):
    worst = 0.0
    for k in range(4):
        x = sol.alpha + radius * np.exp(1j * (0.3 + k * np.pi / 2))
        Y = sol.evaluate(x)
        R = sol.derivative(x) - A(x) @ Y
        worst = max(worst, float(np.linalg.norm(R) / max(1.0, np.linalg.norm(A(x) @ Y))))
    return worst


def cmd_normalform(cfg) -> tuple[int, dict]:
    sys_, data = _load_system(cfg)
    grid = _grid_for(cfg, data, sys_.r)
    target = sys_
    if cfg.witness:
        P = GaugeTransform.from_json(_load_json(cfg.witness)).P
        target = apply_gauge(sys_, P)
    poles = range(len(target.poles)) if cfg.pole is None else [cfg.pole]
    out, ok = [], True
    last_blocks = {}  # pole -> shear exponents at the previous grid point
    for t in grid:
        for i in poles:
            entry = {"t": [complex_to_json(c) for c in t], "pole": i}
            if target.poles[i].order != 1:
                entry["status"] = "not simple; pass a witness gauge with --witness"
                ok = False
                out.append(entry)
                continue
            F = FuchsLocalSystem.from_system(target, i, cfg.trunc, t)
            sol = local_solution(F, N=cfg.trunc)
            entry.update(sol.to_json())
            entry["status"] = "ok"
            blocks = sorted(entry["Sexponents"])
            entry["blockStructureChanged"] = i in last_blocks and last_blocks[i] != blocks
            last_blocks[i] = blocks
            if cfg.verify:
                A = target.numeric(t)
                al = target.alphas_at(t)
                others = np.delete(al, i)
                rho = 0.25 * (float(np.min(np.abs(others - al[i]))) if others.size else 1.0)
                res = _local_residual(sol, A, min(rho, 0.25))
                entry["substitutionResidual"] = res
                ok &= res <= 1e-6
            out.append(entry)
    return (EXIT_OK if ok or not cfg.verify else EXIT_VERIFY), {"command": "normalform", "results": out}


def cmd_monodromy(cfg):
    sys_, data = _load_system(cfg)
    grid = _grid_for(cfg, data, sys_.r)
    base = parse_complex(data["basePoint"]) if isinstance(data, dict) and "basePoint" in data else None
    plan = PathPlan.default(sys_, grid, base)
    md = monodromy_rep(sys_, plan, grid, cfg.tol)
    report = md.to_json()
    code = EXIT_OK
    if md.failures:
        code = EXIT_VERIFY
    if cfg.verify and not md.failures:
        dev = check_product_relation(md, sys_)
        report["productRelationDeviation"] = dev
        if dev > 1e-6:
            code = EXIT_VERIFY
    if cfg.format == "csv":
        return code, md.to_csv()
    return code, {"command": "monodromy", **report}


def _solve_and_verify(cfg, target):
    try:
        sol = rh_solve(target, max_iter=cfg.max_iter, tol_fit=cfg.tol_fit, integration_tol=min(cfg.tol, 1e-10))
        code = EXIT_OK
    except MaxIterationsExceeded as exc:
        sol, code = exc.solution, EXIT_VERIFY
    report = sol.to_json()
    if cfg.verify:
        v = rh_roundtrip_verify(sol, target)
        report["verification"] = v
        if not v["passed"]:
            code = EXIT_VERIFY
    return code, report


def cmd_rhsolve(cfg):
    data = _load_json(cfg.input)
    try:
        target = RHTarget.from_json(data)
    except InvalidTarget:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed target file: {exc}") from exc
    code, report = _solve_and_verify(cfg, target)
    return code, {"command": "rhsolve", **report}


def cmd_roundtrip(cfg):
    if cfg.input:
        sys_, data = _load_system(cfg)
    else:
        sys_, data = random_fuchsian(cfg.seed), {}
    grid = _grid_for(cfg, data, sys_.r) if (cfg.grid or data.get("grid")) else [(0j,), (0.1 + 0j,), (0.2 + 0j,)]
    md = monodromy_rep(sys_, None, grid, min(cfg.tol, 1e-11))
    if md.failures:
        return EXIT_VERIFY, {"command": "roundtrip", "seed": cfg.seed, "failures": md.to_json()["failures"]}
    target = RHTarget.from_monodromy(md, sys_)
    cfg.verify = True
    code, report = _solve_and_verify(cfg, target)
    return code, {"command": "roundtrip", "seed": cfg.seed, "system": sys_.to_json(), "target": target.to_json(),
                  **report}


def cmd_rational(cfg):
    data = _load_json(cfg.input)
    if not isinstance(data, dict):
        raise InputError("rational input must be a JSON object")
    if "candidate" in data:
        sys_ = LinearSystem.from_json(data["system"])
        grid = _grid_for(cfg, data, sys_.r)
        td = bool(data.get("tDerivatives", False))
        names = ("Z", "dZ") if td else ("Z",)
        cand = compile_expression(data["candidate"], names)
        md = monodromy_rep(sys_, None, grid, min(cfg.tol, 1e-10))
        report = invariance_rationality_harness(sys_, md, cand, m_max=cfg.m_max, t_derivatives=td, seed=cfg.seed)
        report["seed"] = cfg.seed
        return EXIT_OK, {"command": "rational", **report}
    r = int(data.get("params", 1))
    grid = _grid_for(cfg, data, r)
    if "expression" in data:
        f = SampledFunction.from_callable(compile_expression(data["expression"], ("x", "t")))
    elif "series" in data:
        coeffs = [parse_complex(c) for c in data["series"]]
        f = SampledFunction.from_series(coeffs, parse_complex(data.get("center", 0.0)))
    else:
        raise InputError("rational input needs 'expression', 'series' or 'candidate'")
    verdict = detect_rational_in_x(f, cfg.m_max, grid, seed=cfg.seed)
    return EXIT_OK, {"command": "rational", "seed": cfg.seed, **verdict.to_json()}


COMMANDS = {
    "classify": (cmd_classify, "classify each pole as simple, regular by witness, or unresolved"),
    "normalform": (cmd_normalform, "local normal form and exponent matrix at simple poles"),
    "monodromy": (cmd_monodromy, "numerical monodromy matrices on a parameter grid"),
    "rhsolve": (cmd_rhsolve, "Fuchsian system realizing given loop matrices"),
    "rational": (cmd_rational, "decide rationality in x of a function or invariant"),
    "roundtrip": (cmd_roundtrip, "forward monodromy, inverse solve and recomputation"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parmonodromy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--input", "-i", help="input JSON file")
        p.add_argument("--output", "-o", default="-", help="output file (default: stdout)")
        p.add_argument("--tol", type=float, default=1e-9, help="integration / numerical tolerance")
        p.add_argument("--trunc", type=int, default=20, help="series truncation order N")
        p.add_argument("--grid", help="parameter grid: JSON list of points, list of {start,stop,count}, or a,b,c")
        p.add_argument("--witness", help="gauge transform JSON used as a regularity witness")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--verify", action="store_true", help="run the self-check and fold it into the exit code")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--pole", type=int, help="restrict to one pole index")
        p.add_argument("--tol-fit", type=float, default=1e-8, help="RH fit tolerance")
        p.add_argument("--max-iter", type=int, default=50, help="RH iteration cap")
        p.add_argument("--m-max", type=int, default=8, help="largest degree tried by the rationality test")
    return parser


def _write(path, payload, fmt):
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.input, args.output, args.tol, args.trunc, args.grid, args.witness,
                    args.seed, args.verify, args.format, args.pole, args.tol_fit, args.max_iter, args.m_max)
    try:
        cfg.validate()
        code, payload = COMMANDS[cfg.command][0](cfg)
    except (InputError, InvalidSystem, InvalidTarget) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MonodromyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _write(cfg.output, {"command": cfg.command, "error": type(exc).__name__, "message": str(exc)}, "json")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if cfg.format == "csv" and not isinstance(payload, str):
        print("note: csv output is only available for monodromy; wrote json", file=sys.stderr)
    _write(cfg.output, payload, cfg.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
