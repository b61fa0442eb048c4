"""Command-line front end.

Exit status: 0 yes/valid, 1 no/invalid, 2 unknown, 64 usage error,
65 malformed input data, 66 unreadable input file, 69 enumeration bound exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .arena import NATURE, SMG, validate_arena
from .best_response import best_response
from .chain import payoff_profile, simulate
from .equilibrium import POSITIONAL, STATIONARY, check_equilibrium
from .errors import BoundExceeded, SMGError, ValidationError
from .formula import size
from .graph import check_almost_sure_termination
from .solvers import (CRSP, NCRSP, NCRSP_STRICT, Verdict, build_psi_stationary, complete_forced,
                      decide_external, emit_constraints, falsify_candidate, grid_search,
                      solve_positional, solve_stationary_positional, verify_stationary_candidate)
from .text import parse_arena, parse_profile, serialize_arena, serialize_profile
from .transforms import crsp_to_ncrspgt, solve_t_memory, unfold_t_memory

EX_USAGE, EX_DATAERR, EX_NOINPUT, EX_BOUND = 64, 65, 66, 69


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EX_USAGE)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror}") from exc


def _load_game(path: str) -> SMG:
    return parse_arena(_read(path))


def _load_profile(path: str, smg: SMG, players) -> dict:
    return complete_forced(smg, parse_profile(_read(path), smg), players)


def _fmt(x) -> str:
    return str(Fraction(x))


def _dist(smg: SMG, dist) -> dict:
    return {smg.arena.names[w]: _fmt(p) for w, p in sorted(dist.items())}


def _strategy_record(smg: SMG, strategy) -> dict:
    if not strategy:
        return {}
    names = smg.arena.names
    out = {}
    for v, d in sorted(strategy.items()):
        if smg.arena.is_terminal(v):
            continue
        out[names[v]] = _dist(smg, d) if isinstance(d, dict) else names[d]
    return out


def _row_record(smg: SMG, row) -> dict:
    names = smg.arena.names
    rec = {
        "profile": {names[v]: names[w] for v, w in sorted(row.profile.items()) if not smg.arena.is_terminal(v)},
        "payoff": [_fmt(p) for p in row.payoff],
        "equilibrium": row.equilibrium,
    }
    if row.deviation is not None:
        rec["deviation"] = {"player": row.deviation[0], "to_row": row.deviation[1]}
    return rec


def _verdict_record(smg: SMG, verdict: Verdict) -> dict:
    rec = {"answer": verdict.answer, "problem": verdict.problem, "mu": _fmt(verdict.mu)}
    if verdict.strategy is not None:
        rec["strategy"] = _strategy_record(smg, verdict.strategy)
    if verdict.table:
        rec["table"] = [_row_record(smg, r) for r in verdict.table]
    if verdict.witness is not None:
        rec["witness"] = _row_record(smg, verdict.witness)
    if verdict.refutations:
        rec["refutations"] = [
            {"strategy": _strategy_record(smg, s), "witness": _row_record(smg, r)} for s, r in verdict.refutations
        ]
    if verdict.memory is not None:
        rec["memory"] = [
            {"history": [smg.arena.names[x] for x in hist], "at": smg.arena.names[v], "move": smg.arena.names[w]}
            for (hist, v), w in sorted(verdict.memory.moves.items())
        ]
    if verdict.note:
        rec["note"] = verdict.note
    return rec


def _verdict_text(rec: dict) -> str:
    lines = [rec["answer"]]
    if rec.get("strategy"):
        lines.append("system strategy:")
        lines += [f"  {v} -> {d}" for v, d in rec["strategy"].items()]
    for k, row in enumerate(rec.get("table", [])):
        tag = "0NE" if row["equilibrium"] else f"deviation by player {row['deviation']['player']}"
        pay = ", ".join(row["payoff"])
        lines.append(f"  [{k}] {row['profile']} payoff ({pay}) {tag}")
    if "witness" in rec:
        pay = ", ".join(rec["witness"]["payoff"])
        lines.append(f"witness: {rec['witness']['profile']} payoff ({pay})")
    if "memory" in rec:
        lines.append("memory strategy:")
        lines += [f"  after {m['history']} at {m['at']} -> {m['move']}" for m in rec["memory"]]
    if rec.get("note"):
        lines.append(rec["note"])
    return "\n".join(lines)


# -- commands ------------------------------------------------------------------

def cmd_validate(args):
    try:
        smg = _load_game(args.file)
    except ValidationError as exc:
        return {"valid": False, "violations": exc.violations}, "\n".join(["invalid"] + exc.violations), 1
    problems = validate_arena(smg)
    rec = {"valid": not problems, "violations": problems, "vertices": smg.n, "players": smg.players}
    text = "valid" if not problems else "\n".join(["invalid"] + problems)
    return rec, text, 0 if not problems else 1


def cmd_payoff(args):
    smg = _load_game(args.file)
    profile = _load_profile(args.profile, smg, range(smg.players))
    pay, _ = payoff_profile(smg, profile)
    rec = {"payoff": [_fmt(p) for p in pay]}
    text = "\n".join(f"player {i}: {p}" for i, p in enumerate(rec["payoff"]))
    return rec, text, 0


def cmd_best_response(args):
    smg = _load_game(args.file)
    if not 0 <= args.player < smg.players:
        raise UsageError(f"player must be in 0..{smg.players - 1}")
    others = [i for i in range(smg.players) if i != args.player]
    profile = _load_profile(args.profile, smg, others)
    br = best_response(smg, profile, args.player)
    names = smg.arena.names
    rec = {
        "player": args.player,
        "value": _fmt(br.values[smg.arena.init]),
        "values": {names[v]: _fmt(x) for v, x in enumerate(br.values)},
        "strategy": _strategy_record(smg, br.strategy),
    }
    text = f"value at {names[smg.arena.init]}: {rec['value']}\n" + serialize_profile(
        {v: d for v, d in br.strategy.items() if not smg.arena.is_terminal(v)}, smg).rstrip()
    return rec, text, 0


def cmd_check_ne(args):
    smg = _load_game(args.file)
    profile = _load_profile(args.profile, smg, range(smg.players))
    witness = check_equilibrium(smg, profile, args.fixed0, args.deviation_class)
    kind = "0-fixed Nash equilibrium" if args.fixed0 else "Nash equilibrium"
    if witness is None:
        return {"equilibrium": True}, f"yes: {kind}", 0
    rec = {
        "equilibrium": False,
        "player": witness.player,
        "old_payoff": _fmt(witness.old_payoff),
        "new_payoff": _fmt(witness.new_payoff),
        "deviation": _strategy_record(smg, witness.deviation),
    }
    text = (f"no: player {witness.player} improves from {rec['old_payoff']} to {rec['new_payoff']}\n"
            + serialize_profile({v: d for v, d in witness.deviation.items()
                                 if not smg.arena.is_terminal(v)}, smg).rstrip())
    return rec, text, 1


def _verdict_result(smg, verdict):
    rec = _verdict_record(smg, verdict)
    return rec, _verdict_text(rec), verdict.exit_code


def cmd_solve_positional(args):
    smg = _load_game(args.file)
    return _verdict_result(smg, solve_positional(smg, args.mu, args.problem))


def cmd_solve_stationary_positional(args):
    smg = _load_game(args.file)
    strict = args.strict
    if args.candidate:
        sigma0 = _load_profile(args.candidate, smg, [0])
        return _verdict_result(smg, verify_stationary_candidate(smg, sigma0, args.mu, strict))
    if args.mode == "grid":
        return _verdict_result(smg, grid_search(smg, args.mu, args.grid_denominator, strict))
    if not args.out:
        raise UsageError("--mode emit needs --out DIRECTORY")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, sentence in enumerate(solve_stationary_positional(smg, args.mu, "emit", strict=strict)):
        names = smg.arena.names
        support = " ".join(f"{names[v]}->{names[w]}" for v, w in sorted(sentence.support)
                           if not smg.arena.is_terminal(v))
        comments = [f"system support: {support or '(forced)'}",
                    f"assumed profitable deviations: {list(sentence.deviations)}"]
        path = out / f"cond_{k:05d}.smt2"
        path.write_text(emit_constraints(sentence.formula, comments))
        files.append(str(path))
    rec = {"emitted": len(files), "directory": str(out)}
    return rec, f"wrote {len(files)} sentences to {out}; the answer is yes iff one is satisfiable", 0


def cmd_solve_stationary(args):
    smg = _load_game(args.file)
    if args.candidate:
        sigma0 = _load_profile(args.candidate, smg, [0])
        found = falsify_candidate(smg, sigma0, args.mu, args.samples, args.seed)
        if found.found:
            rec = {"answer": "no", "counterexample": _strategy_record(smg, found.profile),
                   "payoff": [_fmt(p) for p in found.payoff]}
            return rec, "no: losing 0-fixed equilibrium\n" + serialize_profile(
                {v: d for v, d in found.profile.items() if not smg.arena.is_terminal(v)}, smg).rstrip(), 1
        rec = {"answer": "unknown", "samples": found.samples, "distinct": found.distinct}
        return rec, f"unknown: no counterexample among {found.distinct} distinct samples", 2
    psi = build_psi_stationary(smg, args.mu, args.strict)
    rec = {"size": size(psi)}
    lines = [f"sentence size {rec['size']}"]
    if args.emit:
        Path(args.emit).write_text(emit_constraints(psi))
        rec["file"] = args.emit
        lines.append(f"wrote {args.emit}")
    code = 0
    if args.decide:
        answer = decide_external(psi, args.timeout)
        rec["answer"] = answer
        lines.append(answer)
        code = {"yes": 0, "no": 1, "unknown": 2}[answer]
    return rec, "\n".join(lines), code


def cmd_solve_t_memory(args):
    smg = _load_game(args.file)
    verdict = solve_t_memory(smg, args.t, args.mu, args.problem)
    unfolded = unfold_t_memory(smg, args.t).game
    rec = _verdict_record(unfolded, verdict)
    rec.pop("strategy", None)
    rec.pop("table", None)
    rec.pop("refutations", None)
    return rec, _verdict_text(rec), verdict.exit_code


def cmd_unfold(args):
    smg = _load_game(args.file)
    unfolding = unfold_t_memory(smg, args.t, args.full)
    game = unfolding.game
    return {"vertices": game.n, "game": serialize_arena(game)}, serialize_arena(game).rstrip(), 0


def cmd_reduce(args):
    smg = _load_game(args.file)
    game = crsp_to_ncrspgt(smg)
    return {"players": game.players, "game": serialize_arena(game)}, serialize_arena(game).rstrip(), 0


def cmd_termination(args):
    smg = _load_game(args.file)
    ok = check_almost_sure_termination(smg)
    return {"terminates": ok}, "yes" if ok else "no", 0 if ok else 1


def cmd_simulate(args):
    smg = _load_game(args.file)
    profile = _load_profile(args.profile, smg, range(smg.players))
    result = simulate(smg, profile, args.runs, args.horizon, args.seed)
    rec = {"payoffs": list(result.payoffs), "runs": result.runs, "horizon": result.horizon, "seed": args.seed}
    text = "\n".join(f"player {i}: {p:.4f}" for i, p in enumerate(result.payoffs))
    return rec, text, 0


def to_dot(smg: SMG) -> str:
    arena = smg.arena
    lines = ["digraph arena {", "  rankdir=LR;"]
    for v, name in enumerate(arena.names):
        owner = arena.owner[v]
        shape = "diamond" if owner == NATURE else ("box" if owner == 0 else "ellipse")
        label = name if owner == NATURE else f"{name}\\n[{owner}]"
        extra = ", penwidth=2" if v == arena.init else ""
        lines.append(f'  "{name}" [shape={shape}, label="{label}"{extra}];')
    for v, out in enumerate(arena.edges):
        for w, p in out:
            label = "" if p is None else f' [label="{p}"]'
            lines.append(f'  "{arena.names[v]}" -> "{arena.names[w]}"{label};')
    lines.append("}")
    return "\n".join(lines)


def cmd_dot(args):
    smg = _load_game(args.file)
    dot = to_dot(smg)
    return {"dot": dot}, dot, 0


# -- parser --------------------------------------------------------------------

def _rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="print one JSON record instead of text")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized paths")

    parser = _Parser(prog="smgsynth", description="Rational synthesis on stochastic multiplayer games.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def leaf(group, name, func, help_text):
        p = group.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=func)
        p.add_argument("file", help="game description")
        return p

    leaf(sub, "validate", cmd_validate, "check a game description")
    p = leaf(sub, "payoff", cmd_payoff, "exact payoffs of a stationary profile")
    p.add_argument("--profile", required=True)
    p = leaf(sub, "best-response", cmd_best_response, "optimal value and strategy of one player")
    p.add_argument("--player", type=int, required=True)
    p.add_argument("--profile", required=True)
    p = leaf(sub, "check-ne", cmd_check_ne, "Nash equilibrium check with a deviation witness")
    p.add_argument("--profile", required=True)
    p.add_argument("--fixed0", action="store_true", help="the system may not deviate")
    p.add_argument("--class", dest="deviation_class", choices=[STATIONARY, POSITIONAL], default=STATIONARY)

    solve = sub.add_parser("solve", help="synthesis problems").add_subparsers(
        dest="problem_class", required=True, parser_class=_Parser)
    p = leaf(solve, "positional", cmd_solve_positional, "brute force over positional strategies")
    p.add_argument("--mu", type=_rational, required=True)
    p.add_argument("--problem", choices=[NCRSP, CRSP, NCRSP_STRICT], default=NCRSP)
    p = leaf(solve, "stationary-positional", cmd_solve_stationary_positional,
             "stationary system against positional environment")
    p.add_argument("--mu", type=_rational, required=True)
    p.add_argument("--mode", choices=["grid", "emit"], default="grid")
    p.add_argument("--grid-denominator", type=int, default=4)
    p.add_argument("--candidate", help="verify this system strategy instead of searching")
    p.add_argument("--out", help="directory for emitted sentences")
    p.add_argument("--strict", action="store_true", help="require payoff strictly above mu")
    p = leaf(solve, "stationary", cmd_solve_stationary, "fully stationary problem via an external solver")
    p.add_argument("--mu", type=_rational, required=True)
    p.add_argument("--emit", help="write the sentence as SMT-LIB to this file")
    p.add_argument("--decide", action="store_true", help="decide the sentence with z3 if installed")
    p.add_argument("--timeout", type=int, default=60000, help="external solver timeout in ms")
    p.add_argument("--candidate", help="search for a counterexample to this system strategy")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--strict", action="store_true")
    p = leaf(solve, "t-memory", cmd_solve_t_memory, "pure bounded-memory strategies via unfolding")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--mu", type=_rational, required=True)
    p.add_argument("--problem", choices=[NCRSP, CRSP, NCRSP_STRICT], default=NCRSP)

    p = leaf(sub, "unfold", cmd_unfold, "t-memory unfolding of a game")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--full", action="store_true", help="include unreachable windows")
    reduce = sub.add_parser("reduce", help="game reductions").add_subparsers(
        dest="reduction", required=True, parser_class=_Parser)
    leaf(reduce, "crsp-to-ncrspgt", cmd_reduce, "cooperative to strict non-cooperative gadget")
    check = sub.add_parser("check", help="structural checks").add_subparsers(
        dest="check", required=True, parser_class=_Parser)
    leaf(check, "termination", cmd_termination, "almost-sure termination under every profile")
    p = leaf(sub, "simulate", cmd_simulate, "Monte-Carlo payoff estimate")
    p.add_argument("--profile", required=True)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=100)
    leaf(sub, "dot", cmd_dot, "Graphviz rendering of the arena")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    as_json = getattr(args, "json", False)
    args.seed = getattr(args, "seed", 0)
    try:
        rec, text, code = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"smgsynth: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except FileNotFoundError as exc:
        print(f"smgsynth: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except BoundExceeded as exc:
        print(f"smgsynth: refused: {exc}", file=sys.stderr)
        return EX_BOUND
    except SMGError as exc:
        print(f"smgsynth: {exc}", file=sys.stderr)
        return EX_DATAERR
    if as_json:
        print(json.dumps(rec, sort_keys=True))
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
