"""Command-line front end.

JSON in, JSON out: every subcommand prints a single JSON document with
sorted keys, so identical inputs (and seed) produce byte-identical output.
Exit codes: 0 on success, 2 when a mathematical obstruction was detected
(the obstruction is the result, reported in the JSON), 1 on input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from .actions import (Cocycle, ModelSpec, ProductAction, clock, coboundary,
                      extend_cocycle, make_model_action, perturb, shift,
                      trivial_action)
from .classify import approximate_match, ek_rounds, invariants_equal
from .config import DEFAULT, Tolerances
from .errors import InputError, MathObstruction
from .homotopy import lip_shrink_loop
from .invariants import (action_invariant, bott, kappa_fast, kappa_loop)
from .linalg import (expm_sa, matrix_from_json, matrix_to_json, op_norm,
                     random_selfadjoint)
from .paths import UnitaryPath
from .rohlin import build_tower, vanish_cocycle, verify_tower
from .uhf import SupernaturalNumber, embed_factor, truncate

__all__ = ["main", "run"]


# --- argument parsing helpers -----------------------------------------------

def _load_json_arg(spec: str):
    """Inline JSON or @file reference."""
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as fh:
            return json.load(fh)
    return json.loads(spec)


def parse_matrix(spec: str) -> np.ndarray:
    """Matrix argument: 'clock:q', 'shift:q', 'eye:n', inline JSON or @file."""
    if spec.startswith("clock:"):
        return clock(int(spec.split(":", 1)[1]))
    if spec.startswith("shift:"):
        return shift(int(spec.split(":", 1)[1]))
    if spec.startswith("eye:"):
        return np.eye(int(spec.split(":", 1)[1]), dtype=complex)
    return matrix_from_json(_load_json_arg(spec))


def parse_action(spec: str, budget: int | None) -> ProductAction:
    """Action argument: explicit action JSON, or a model spec with sn/f."""
    obj = _load_json_arg(spec)
    if "gen1" in obj or "W1" in obj:
        return ProductAction.from_json(obj)
    if "sn" in obj:
        sn_obj = obj["sn"]
        if "exponents" not in sn_obj:
            sn_obj = {"exponents": sn_obj}
        sn = SupernaturalNumber.from_json(sn_obj)
        b = int(obj.get("budget", budget or 0))
        if b <= 0:
            raise InputError("model spec needs a budget (--budget or JSON)")
        trunc = truncate(sn, budget=b)
        f = {int(p): int(v) for p, v in obj.get("f", {}).items()}
        if "L1" in obj and "L2" in obj:
            ms = ModelSpec(f, tuple(obj["L1"]), tuple(obj["L2"]))
        else:
            ms = ModelSpec.balanced(trunc, f)
        return make_model_action(ms, trunc)
    raise InputError("action JSON needs either gen1/W1 or sn keys")


def parse_path(spec: str) -> UnitaryPath:
    """Loop argument: {'ts': [...], 'mats': [matrix...], 'closed': bool}."""
    obj = _load_json_arg(spec)
    mats = [matrix_from_json(m) for m in obj["mats"]]
    ts = obj.get("ts")
    if ts is None:
        ts = np.linspace(0.0, 1.0, len(mats))
    return UnitaryPath(ts, mats, closed=bool(obj.get("closed", True)))


def _tolerances(args) -> Tolerances:
    over = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            over.update(json.load(fh))
    if getattr(args, "tol", None) is not None:
        over["unitarity_tol"] = float(args.tol)
    known = DEFAULT.as_dict()
    bad = set(over) - set(known)
    if bad:
        raise InputError(f"unknown tolerance keys: {sorted(bad)}")
    known.update(over)
    return Tolerances(**known)


def _sanitize(obj):
    """Recursively convert library values into JSON-dumpable data."""
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[0] == obj.shape[1]:
            return matrix_to_json(obj)
        return [_sanitize(x) for x in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return {"re": float(np.real(obj)), "im": float(np.imag(obj))}
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_sanitize(v) for v in obj)
    if hasattr(obj, "to_json"):
        return _sanitize(obj.to_json())
    return obj


def _emit(payload, args) -> None:
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2) + "\n"
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _set_threads(n: int | None) -> None:
    # best effort: cap the BLAS pools when threadpoolctl is available;
    # results do not depend on the thread count
    if n is None:
        return
    os.environ.setdefault("OMP_NUM_THREADS", str(n))
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=int(n))
    except ImportError:
        pass


# --- subcommands ------------------------------------------------------------

def _cmd_bott(args, tol):
    v = parse_matrix(args.v)
    w = parse_matrix(args.w)
    comm = op_norm(v @ w @ v.conj().T @ w.conj().T - np.eye(v.shape[0]))
    return {"bott": bott(v, w, tol), "commutator_norm": comm}


def _cmd_kappa(args, tol):
    action = parse_action(args.action, args.budget)
    u1 = parse_matrix(args.u1)
    u2 = parse_matrix(args.u2)
    if args.method == "loop":
        from .homotopy import short_path
        kr = kappa_loop(u1, u2, action, short_path(u1, tol=tol),
                        short_path(u2, tol=tol), tol)
    else:
        kr = kappa_fast(u1, u2, action, tol)
    return {"kappa": kr.to_json(), "method": args.method}


def _cmd_invariant(args, tol):
    action = parse_action(args.action, args.budget)
    primes = [int(p) for p in args.primes.split(",")] if args.primes else None
    inv = action_invariant(action, primes=primes, tol=tol)
    return {"invariant": {str(p): r.to_json() for p, r in inv.items()}}


def _cmd_model(args, tol):
    action = parse_action(args.action, args.budget)
    return {"action": action.to_json(),
            "dim": action.dim,
            "factors": list(action.trunc.factors)}


def _cmd_towers(args, tol):
    action = parse_action(args.action, args.budget)
    protected = ([int(k) for k in args.protected.split(",")]
                 if args.protected else [])
    t = build_tower(action, frozenset(protected), M=args.min_height, tol=tol)
    return {"tower": t.to_json(dense=args.dense),
            "verify": verify_tower(t, action, F=(), eps=tol.exact_tol)}


def _cmd_vanish(args, tol):
    action = parse_action(args.action, args.budget)
    u1 = parse_matrix(args.u1)
    u2 = parse_matrix(args.u2)
    F = [parse_matrix(s) for s in (args.F or [])]
    c = Cocycle.from_pair(u1, u2, action, tol)
    v, report = vanish_cocycle(action, c, F=F, eps=args.eps, tol=tol,
                               min_height=args.min_height)
    return {"witness": v, "report": report}


def _cmd_shrink(args, tol):
    loop = parse_path(args.loop)
    res = lip_shrink_loop(loop, C=args.C, eps=args.eps, tol=tol,
                          subdivision=args.subdivision)
    return {"L": res.L, "C_prime": res.C_prime,
            "max_defect": res.max_defect,
            "ts": [float(t) for t in res.h.ts],
            "h": list(res.h.mats)}


def _cmd_extend(args, tol):
    action = parse_action(args.action, args.budget)
    u1 = parse_matrix(args.u1)
    u2 = parse_matrix(args.u2)
    c = Cocycle.from_pair(u1, u2, action, tol)
    n = tuple(int(x) for x in args.n.split(","))
    if len(n) != 2:
        raise InputError("--n expects 'n1,n2'")
    u_n = extend_cocycle(c, action, n, tol)
    return {"u_n": u_n, "n": list(n), "cocycle_defect": c.defect}


def _cmd_match(args, tol):
    alpha = parse_action(args.alpha, args.budget)
    beta = parse_action(args.beta, args.budget)
    F = [parse_matrix(s) for s in (args.F or [])]
    cb, report = approximate_match(alpha, beta, F=F, eps=args.eps, tol=tol)
    return {"u1": cb.u1, "u2": cb.u2, "cocycle_defect": cb.defect,
            "report": report}


def _cmd_ek(args, tol):
    alpha = parse_action(args.alpha, args.budget)
    beta = parse_action(args.beta, args.budget)
    F = [parse_matrix(s) for s in (args.F or [])]
    eps_schedule = ([float(x) for x in args.eps_schedule.split(",")]
                    if args.eps_schedule else None)
    return ek_rounds(alpha, beta, args.rounds, F_schedule=F or None,
                     eps_schedule=eps_schedule, tol=tol)


def _cmd_selftest(args, tol):
    return _selftest(int(args.seed if args.seed is not None else 0), tol)


def _selftest(seed: int, tol: Tolerances) -> dict:
    """Deterministic reduced corpus exercising every major operation."""
    from .invariants import cocycle_power
    checks = []

    def record(name, ok, **vals):
        entry = {"name": name, "pass": bool(ok)}
        entry.update(vals)
        checks.append(entry)

    # Bott oracle on clock/shift pairs
    botts = {q: bott(clock(q), shift(q), tol) for q in (5, 7, 9, 11)}
    record("bott_clock_shift", all(v == 1 for v in botts.values()),
           values={str(q): v for q, v in botts.items()})

    # kappa trace bound on seeded almost cocycles
    rng = np.random.default_rng(seed)
    trunc = truncate(SupernaturalNumber({2: 1, 3: "inf"}), budget=18)
    action = make_model_action(ModelSpec.balanced(trunc, {}), trunc)
    worst = 0.0
    ok = True
    for _ in range(10):
        v0 = expm_sa(random_selfadjoint(trunc.dim, rng, norm=0.2))
        c = coboundary(v0, action)
        e = expm_sa(random_selfadjoint(trunc.dim, rng, norm=0.05))
        u1 = e @ c.u1
        cc = Cocycle.from_pair(u1, c.u2, action, tol)
        kr = kappa_fast(u1, c.u2, action, tol)
        bound = float(np.arcsin(min(cc.defect, 1.0)) / (2.0 * np.pi))
        ok = ok and abs(kr.value.numerator / kr.value.denominator) <= bound
        worst = max(worst, kr.residual)
    record("kappa_trace_bound", ok, max_residual=worst)

    # cocycle power multiplicativity
    c = coboundary(expm_sa(random_selfadjoint(trunc.dim, rng, norm=0.1)),
                   action)
    k0 = kappa_fast(c.u1, c.u2, action, tol).integer_form
    p1, p2, _, _ = cocycle_power(c, action, 2, 3, tol)
    kp = kappa_fast(p1, p2, action.power_action(2, 3), tol).integer_form
    record("kappa_power", kp == 6 * k0, base=k0, powered=kp)

    # model invariant round trip
    tr5 = truncate(SupernaturalNumber({2: 1, 3: 1, 5: "inf"}), budget=30)
    ok = True
    got = {}
    for f2 in range(2):
        for f3 in range(3):
            f = {2: f2, 3: f3}
            g = make_model_action(ModelSpec.balanced(tr5, f), tr5)
            inv = action_invariant(g, tol=tol)
            got[f"{f2},{f3}"] = {str(p): r.value for p, r in inv.items()}
            ok = ok and inv[2].value == f2 and inv[3].value == f3
    record("model_invariant", ok, values=got)

    # tower exactness
    t = build_tower(action, frozenset(), M=3, tol=tol)
    rep = verify_tower(t, action, F=(), eps=tol.exact_tol)
    record("tower_exact", rep["pass"], max_defect=rep["max_defect"],
           shape=list(t.shape))

    # cohomology vanishing on a small coboundary
    v0 = embed_factor(expm_sa(random_selfadjoint(2, rng, norm=0.03)),
                      trunc, 0)
    cb = coboundary(v0, action)
    v, vrep = vanish_cocycle(action, cb, F=[], eps=0.25, tol=tol)
    record("vanish_cocycle", max(vrep["eps_achieved"]) < 0.25,
           eps_achieved=vrep["eps_achieved"])

    # loop shrinking contract on a conjugated exponential loop
    h0 = np.diag(np.array([0.3, -0.2, 0.1, -0.25, 0.05, 0.0]))
    w = expm_sa(random_selfadjoint(6, rng, norm=0.4))
    loop = UnitaryPath.from_function(
        lambda t: w @ expm_sa(float(np.sin(np.pi * t) ** 2) * h0)
        @ w.conj().T, samples=49, closed=True)
    res = lip_shrink_loop(loop, eps=0.2, tol=tol)
    record("lip_shrink", res.max_defect < 0.2, L=res.L,
           max_defect=res.max_defect)

    out = {"seed": seed, "checks": checks,
           "pass": all(c["pass"] for c in checks)}
    return out


# --- driver -----------------------------------------------------------------

_SCHEMAS = {
    "matrix": {"dim": "int", "re": "[[float]] row-major",
               "im": "[[float]] row-major"},
    "action": {"either": {"trunc": "...", "gen1": "[factor gen]",
                          "gen2": "[factor gen]"},
               "or": {"trunc": "...", "W1": "matrix", "W2": "matrix"},
               "or_model": {"sn": {"prime": "exponent or 'inf'"},
                            "f": {"prime": "residue"}, "budget": "int",
                            "L1": "[int] optional", "L2": "[int] optional"}},
    "path": {"ts": "[float] optional", "mats": "[matrix]", "closed": "bool"},
    "tower": {"shapes": "[[m1, m2]]", "factors_used": {"dir": "[int]"},
              "protected": "[int]", "projections": "optional dense"},
    "vanish_report": {"eps_target": "float", "eps_achieved": "[e1, e2]",
                      "commutator_max": "float", "budget": "itemized"},
    "transcript": {"rounds": [{"round": "int", "matcher_defect": "float",
                               "vanish_eps": "[e1, e2]",
                               "kappa_corrections": "int",
                               "wall_time": "float"}],
                   "final_defect": "float", "monotone": "bool"},
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="uhfz2",
        description="K-theoretic invariants of Z^2-actions on UHF "
                    "truncations")
    ap.add_argument("--schema", action="store_true",
                    help="print the JSON schemas and exit")
    sub = ap.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON file overriding tolerances")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--tol", type=float, default=None,
                       help="override the unitarity tolerance")
        p.add_argument("--out", help="write the JSON result to a file")
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("bott", help="Bott element of two unitaries")
    p.add_argument("--v", required=True)
    p.add_argument("--w", required=True)
    common(p)

    p = sub.add_parser("kappa", help="kappa of an almost cocycle")
    p.add_argument("--u1", required=True)
    p.add_argument("--u2", required=True)
    p.add_argument("--action", required=True)
    p.add_argument("--method", choices=("fast", "loop"), default="fast")
    common(p)

    p = sub.add_parser("invariant", help="per-prime action invariant")
    p.add_argument("--action", required=True)
    p.add_argument("--primes", help="comma-separated prime list")
    common(p)

    p = sub.add_parser("model", help="build a clock/shift model action")
    p.add_argument("--action", required=True,
                   help="model spec JSON with sn/f")
    common(p)

    p = sub.add_parser("towers", help="exact Rohlin grid tower")
    p.add_argument("--action", required=True)
    p.add_argument("--protected", help="comma-separated factor indices")
    p.add_argument("--min-height", type=int, default=2)
    p.add_argument("--dense", action="store_true")
    common(p)

    p = sub.add_parser("vanish", help="trivialize an admissible cocycle")
    p.add_argument("--action", required=True)
    p.add_argument("--u1", required=True)
    p.add_argument("--u2", required=True)
    p.add_argument("--F", action="append")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--min-height", type=int, default=3)
    common(p)

    p = sub.add_parser("shrink", help="exponential form of a closed loop")
    p.add_argument("--loop", required=True)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--subdivision", type=int, default=None)
    common(p)

    p = sub.add_parser("extend", help="staircase cocycle extension to u_n")
    p.add_argument("--action", required=True)
    p.add_argument("--u1", required=True)
    p.add_argument("--u2", required=True)
    p.add_argument("--n", required=True, help="target index 'n1,n2'")
    common(p)

    p = sub.add_parser("match", help="coboundary matching of two actions")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--F", action="append")
    p.add_argument("--eps", type=float, default=0.1)
    common(p)

    p = sub.add_parser("ek", help="alternating intertwining rounds")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--F", action="append")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--eps-schedule", help="comma-separated eps per round")
    common(p)

    p = sub.add_parser("selftest", help="deterministic self-test corpus")
    common(p)

    return ap


_COMMANDS = {
    "bott": _cmd_bott,
    "kappa": _cmd_kappa,
    "invariant": _cmd_invariant,
    "model": _cmd_model,
    "towers": _cmd_towers,
    "vanish": _cmd_vanish,
    "shrink": _cmd_shrink,
    "extend": _cmd_extend,
    "match": _cmd_match,
    "ek": _cmd_ek,
    "selftest": _cmd_selftest,
}


def run(argv) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.schema:
        sys.stdout.write(json.dumps(_SCHEMAS, sort_keys=True, indent=2)
                         + "\n")
        return 0
    if not args.command:
        ap.print_usage(sys.stderr)
        return 1
    _set_threads(getattr(args, "threads", None))
    try:
        tol = _tolerances(args)
        payload = _COMMANDS[args.command](args, tol)
    except MathObstruction as exc:
        payload = {"obstruction": {"type": type(exc).__name__,
                                   "message": str(exc)}}
        extra = getattr(exc, "report", None)
        if extra is not None:
            payload["obstruction"]["report"] = extra
        _emit(payload, args)
        return 2
    except (InputError, OSError, json.JSONDecodeError, KeyError,
            ValueError) as exc:
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}},
              args)
        return 1
    _emit(payload, args)
    if args.command == "selftest" and not payload["pass"]:
        return 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
