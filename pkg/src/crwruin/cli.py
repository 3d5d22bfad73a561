"""Command-line interface.

Subcommands: ``closed-form``, ``solve``, ``oracle``, ``simulate``,
``pattern`` and ``verify``.  Exit status is 0 on success, 1 when a
``verify`` check fails, 2 on invalid input and 3 on solver failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import analytic, martingale, oracle, patterns
from .chains import (
    GeneralChain,
    SymmetricDelayChain,
    TwoStateChain,
    as_general,
    chain_from_json,
    chain_to_json,
)
from .errors import CRWError, DomainError, ReducibleChain, SolverError, ValidationError
from .problem import Barriers

COMMANDS = ("closed-form", "solve", "oracle", "simulate", "pattern", "verify")
OPTION_KEYS = {
    "closed-form": set(),
    "solve": set(),
    "oracle": {"horizon"},
    "simulate": {"seed", "n_paths", "step_cap", "partitions"},
    "pattern": {"facts", "win", "lose", "coin_bias"},
    "verify": {"seed", "n_paths", "step_cap", "horizon", "tolerance"},
}
EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_TOLERANCE = 1e-9


@dataclass
class JobSpec:
    command: str
    chain: dict | None = None
    barriers: tuple | None = None
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj) -> "JobSpec":
        if not isinstance(obj, dict):
            raise ValidationError("job spec must be an object", field="job")
        extra = sorted(set(obj) - {"command", "chain", "barriers", "options"})
        if extra:
            raise ValidationError(f"unknown field '{extra[0]}'", field=extra[0])
        spec = cls(obj.get("command"), obj.get("chain"),
                   tuple(obj["barriers"]) if obj.get("barriers") is not None else None,
                   dict(obj.get("options") or {}))
        spec.validate()
        return spec

    def validate(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}", field="command")
        extra = sorted(set(self.options) - OPTION_KEYS[self.command])
        if extra:
            raise ValidationError(f"unknown option '{extra[0]}'", field=extra[0])
        if self.command != "pattern":
            if self.chain is None:
                raise ValidationError("a chain is required", field="chain")
            chain_from_json(self.chain)
            if self.barriers is None or len(self.barriers) != 2:
                raise ValidationError("barriers A and B are required", field="A")
            Barriers(*self.barriers)
        elif self.barriers is not None:
            Barriers(*self.barriers)


# ---------------------------------------------------------------- dispatch

def _closed_form(chain, b):
    return analytic.solve(chain, b).to_dict()


def _solve(chain, b):
    sol = martingale.ruin_general(chain, b)
    out = sol.to_dict()
    out["expected_tau_oracle"] = oracle.first_step(chain, b).expected_tau
    if out["expected_tau"] is None:
        out["expected_tau"] = out["expected_tau_oracle"]
    return out


def _oracle(chain, b, opts):
    fs = oracle.first_step(chain, b)
    out = {"alpha": fs.alpha, "beta": 1.0 - fs.alpha, "expected_tau": fs.expected_tau,
           "residual": fs.residual, "n_states": fs.n_states}
    if opts.get("horizon") is not None:
        en = oracle.enumerate_paths(chain, b, int(opts["horizon"]))
        out["enumeration"] = {"alpha_lower": en.alpha_lower, "alpha_upper": en.alpha_upper,
                              "mass_unresolved": en.mass_unresolved, "nodes": en.nodes,
                              "horizon": int(opts["horizon"])}
    return out


def _simulate(chain, b, opts):
    mc = oracle.simulate(chain, b, int(opts.get("n_paths", 100_000)), int(opts.get("seed", 0)),
                         step_cap=int(opts.get("step_cap", oracle.DEFAULT_STEP_CAP)),
                         partitions=int(opts.get("partitions", 1)))
    return mc.to_dict()


def _pattern(opts, barriers):
    bias = float(opts.get("coin_bias", 0.5))
    out = {}
    if opts.get("facts") or not (opts.get("win") or opts.get("lose")):
        out["facts"] = patterns.pattern_facts(bias)
    if opts.get("win") or opts.get("lose"):
        if not (opts.get("win") and opts.get("lose")):
            raise ValidationError("both --win and --lose are required", field="win")
        win, lose = patterns.parse_pattern(opts["win"]), patterns.parse_pattern(opts["lose"])
        rc = patterns.race(win, lose, bias)
        game = {
            "win": str(win), "lose": str(lose), "coin_bias": bias,
            "waiting_time_win": patterns.waiting_time(win, bias),
            "waiting_time_lose": patterns.waiting_time(lose, bias),
            "waiting_time_either": rc.expected_flips,
            "prob_win_first": rc.p_win,
            "ties_possible": rc.ties_possible,
        }
        if len(win) == 2 and len(lose) == 2 and 0.0 < bias < 1.0:
            verdict = patterns.markov_check(patterns.PatternGame(win, lose, bias))
            game["payoffs_markov"] = verdict.is_markov
            if verdict.is_markov:
                game["payoff_chain"] = {"type": "general", "matrix": verdict.matrix,
                                        "initial": list(verdict.initial)}
                if barriers is not None:
                    chain = GeneralChain.from_matrix(verdict.matrix, verdict.initial)
                    sol = martingale.ruin_general(chain, barriers)
                    game["ruin_alpha"] = sol.alpha
                    game["ruin_method"] = sol.method
            else:
                game["markov_witness"] = list(verdict.witness)
        out["game"] = game
    return out


def _check(rows, name, value, reference, tolerance):
    delta = abs(value - reference)
    rows.append({"check": name, "value": value, "reference": reference,
                 "delta": delta, "tolerance": tolerance, "pass": bool(delta <= tolerance)})


def _verify(chain, b, opts):
    tol = float(opts.get("tolerance", DEFAULT_TOLERANCE))
    rows = []
    fs = oracle.first_step(chain, b)
    ref_tau = fs.expected_tau

    closed = None
    if isinstance(chain, (TwoStateChain, SymmetricDelayChain)):
        try:
            closed = analytic.solve(chain, b)
        except DomainError:
            closed = None
    if closed is not None:
        _check(rows, f"{closed.method} alpha", closed.alpha, fs.alpha, tol)
        if ref_tau is not None:
            _check(rows, f"{closed.method} E(tau)", closed.expected_tau, ref_tau, tol)

    try:
        mg = martingale.ruin_general(as_general(chain), b)
    except SolverError as exc:
        rows.append({"check": "martingale alpha", "value": None, "reference": fs.alpha,
                     "delta": None, "tolerance": tol, "pass": False, "error": str(exc)})
    else:
        _check(rows, f"{mg.method} alpha", mg.alpha, fs.alpha, tol)
        if mg.expected_tau is not None and ref_tau is not None:
            _check(rows, f"{mg.method} E(tau)", mg.expected_tau, ref_tau, tol)

    if opts.get("horizon") is not None:
        en = oracle.enumerate_paths(chain, b, int(opts["horizon"]))
        outside = max(en.alpha_lower - fs.alpha, fs.alpha - en.alpha_upper, 0.0)
        rows.append({"check": "enumeration bracket", "value": en.alpha_lower,
                     "reference": fs.alpha, "delta": outside,
                     "tolerance": en.mass_unresolved, "pass": outside <= 1e-12})
    if opts.get("n_paths"):
        mc = oracle.simulate(chain, b, int(opts["n_paths"]), int(opts.get("seed", 0)),
                             step_cap=int(opts.get("step_cap", oracle.DEFAULT_STEP_CAP)))
        _check(rows, "monte-carlo alpha", mc.alpha_hat, fs.alpha, 4.0 * mc.stderr_alpha)
        if ref_tau is not None:
            _check(rows, "monte-carlo E(tau)", mc.tau_hat, ref_tau, 4.0 * mc.stderr_tau)
    return {"reference_alpha": fs.alpha, "reference_expected_tau": ref_tau,
            "checks": rows, "passed": all(r["pass"] for r in rows)}


def run(spec: JobSpec) -> dict:
    """Execute a validated job and return its report."""
    spec.validate()
    report = {"command": spec.command}
    if spec.command == "pattern":
        b = Barriers(*spec.barriers) if spec.barriers is not None else None
        report["result"] = _pattern(spec.options, b)
        return report
    chain = chain_from_json(spec.chain)
    b = Barriers(*spec.barriers)
    report["chain"] = chain_to_json(chain)
    report["barriers"] = {"A": b.A, "B": b.B}
    if spec.command == "closed-form":
        report["result"] = _closed_form(chain, b)
    elif spec.command == "solve":
        report["result"] = _solve(chain, b)
    elif spec.command == "oracle":
        report["result"] = _oracle(chain, b, spec.options)
    elif spec.command == "simulate":
        report["result"] = _simulate(chain, b, spec.options)
    else:
        report["result"] = _verify(chain, b, spec.options)
    return report


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _flatten(obj, prefix=""):
    for key in sorted(obj):
        val = obj[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _flatten(val, name + ".")
        else:
            yield name, val


def emit(report: dict, fmt: str = "text") -> str:
    """Render a report as stable JSON or a fixed-width text table."""
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"
    lines = []
    checks = None
    body = dict(report)
    if isinstance(body.get("result"), dict) and "checks" in body["result"]:
        body["result"] = dict(body["result"])
        checks = body["result"].pop("checks")
    pairs = list(_flatten(body))
    width = max((len(k) for k, _ in pairs), default=0)
    for k, v in pairs:
        lines.append(f"{k:<{width}}  {_fmt(v)}")
    if checks is not None:
        lines.append("")
        head = f"{'check':<34} {'value':>20} {'reference':>20} {'|delta|':>20} {'tolerance':>20}  result"
        lines.append(head)
        lines.append("-" * len(head))
        for row in checks:
            lines.append(
                f"{row['check']:<34} {_fmt(row['value']):>20} {_fmt(row['reference']):>20} "
                f"{_fmt(row['delta']):>20} {_fmt(row['tolerance']):>20}  "
                f"{'PASS' if row['pass'] else 'FAIL'}"
            )
    return "\n".join(lines) + "\n"


def error_report(exc) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc),
                      "field": getattr(exc, "field", None)}}


# ---------------------------------------------------------------- argparse

def _load_chain(args):
    if args.chain_json is not None and args.chain is not None:
        raise ValidationError("give either --chain-json or --chain, not both", field="chain")
    if args.chain_json is not None:
        text = args.chain_json
    elif args.chain is not None:
        path = args.chain[1:] if args.chain.startswith("@") else args.chain
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read chain file: {exc}", field="chain") from exc
    else:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed chain JSON: {exc}", field="chain") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crwruin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, chain=True):
        if chain:
            p.add_argument("--chain-json", help="chain specification as inline JSON")
            p.add_argument("--chain", help="chain specification file (@path or path)")
        p.add_argument("-A", type=int, help="upper barrier")
        p.add_argument("-B", type=int, help="lower barrier magnitude")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("closed-form", help="evaluate the closed-form formulas")
    common(p)
    p = sub.add_parser("solve", help="martingale solver (+ first-step E tau)")
    common(p)
    p = sub.add_parser("oracle", help="first-step analysis (and path enumeration)")
    common(p)
    p.add_argument("--horizon", type=int)
    p = sub.add_parser("simulate", help="seeded Monte Carlo")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--step-cap", type=int, default=oracle.DEFAULT_STEP_CAP)
    p.add_argument("--partitions", type=int, default=1)
    p = sub.add_parser("pattern", help="coin-flip pattern facts and races")
    common(p, chain=False)
    p.add_argument("--facts", action="store_true")
    p.add_argument("--win")
    p.add_argument("--lose")
    p.add_argument("--bias", type=float, default=0.5)
    p = sub.add_parser("verify", help="cross-method agreement table")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int)
    p.add_argument("--step-cap", type=int, default=oracle.DEFAULT_STEP_CAP)
    p.add_argument("--horizon", type=int)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    return parser


def spec_from_args(args) -> JobSpec:
    barriers = None
    if args.A is not None or args.B is not None:
        barriers = (args.A, args.B)
    opts = {}
    cmd = args.command
    if cmd == "oracle" and args.horizon is not None:
        opts["horizon"] = args.horizon
    if cmd in ("simulate", "verify"):
        opts["seed"] = args.seed
        opts["step_cap"] = args.step_cap
        if args.paths is not None:
            opts["n_paths"] = args.paths
    if cmd == "simulate":
        opts["partitions"] = args.partitions
    if cmd == "verify":
        opts["tolerance"] = args.tolerance
        if args.horizon is not None:
            opts["horizon"] = args.horizon
    if cmd == "pattern":
        opts = {"facts": args.facts, "coin_bias": args.bias}
        if args.win:
            opts["win"] = args.win
        if args.lose:
            opts["lose"] = args.lose
        return JobSpec(cmd, None, barriers, opts)
    return JobSpec(cmd, _load_chain(args), barriers, opts)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        report = run(spec)
    except ValidationError as exc:
        sys.stdout.write(emit(error_report(exc), args.format))
        return EXIT_INVALID
    except (SolverError, ReducibleChain, CRWError) as exc:
        sys.stdout.write(emit(error_report(exc), args.format))
        return EXIT_SOLVER
    sys.stdout.write(emit(report, args.format))
    if report["command"] == "verify" and not report["result"]["passed"]:
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
