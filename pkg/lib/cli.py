"""Command-line front end: `lrvg <command> ...`.

Exit codes: 0 system wins, 1 environment wins, 2 unknown, 3 unsupported
fragment, 4 any other error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from lib.automaton import build_atoms, build_dpa, to_dot
from lib.counter_machines import load_cm, run_bounded
from lib.encoders import (
    encode_future_singlesided,
    encode_lossy,
    encode_reach_blocks,
    encode_reach_bool,
    encode_reach_bounded,
)
from lib.energy_service import solve_energy
from lib.errors import FormulaSyntaxError, UnsupportedFragmentError
from lib.formula import format_document, format_formula, format_signature
from lib.formula_parser import GRAMMAR_EXCERPT, load_formula
from lib.fragments import classify_fragment
from lib.frames import FrameContext, frame_counts
from lib.game_sim import EnvForcesFalseBy, ThreeValued, check_prefix, finite_minimax, load_script, play, prefix_precision
from lib.realizability_service import prepare, realizability, reduce_formula
from lib.report_service import RunReport, stopwatch
from lib.settings import DEFAULT_CAP_SCHEDULE, get_settings, parse_cap_schedule
from lib.vass import format_vass, parse_vass, validate
from lib.vass_to_lrv import normalize_vass_for_lrv, vass_to_lrv

logger = logging.getLogger(__name__)

EXIT_SYS = 0
EXIT_ENV = 1
EXIT_UNKNOWN = 2
EXIT_UNSUPPORTED = 3
EXIT_ERROR = 4

ENCODERS = {
    "bool": encode_reach_bool,
    "blocks": encode_reach_blocks,
    "bounded": encode_reach_bounded,
    "future": encode_future_singlesided,
    "lossy": encode_lossy,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\nformula grammar:\n{GRAMMAR_EXCERPT}\n")
        raise SystemExit(EXIT_ERROR)


def _verdict_exit(kind: str) -> int:
    return {"SystemWins": EXIT_SYS, "EnvironmentWins": EXIT_ENV}.get(kind, EXIT_UNKNOWN)


def _emit(args: argparse.Namespace, report: RunReport, text: str) -> None:
    if args.json:
        print(report.to_json())
    elif text:
        print(text)


def _table(df: pd.DataFrame) -> str:
    return df.to_string(index=False) if not df.empty else "(empty)"


# --------------------------------------------------------------------------- formulas


def cmd_parse(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    report = RunReport("parse", {"file": args.file}, extra={"signature": format_signature(sig), "formula": format_formula(f)})
    _emit(args, report, format_document(sig, f))
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    flags = classify_fragment(f, sig)
    report = RunReport("classify", {"file": args.file}, extra={"flags": flags.as_dict()})
    _emit(args, report, "\n".join(f"{k}: {v}" for k, v in flags.as_dict().items()))
    return 0


def _caps(args: argparse.Namespace) -> tuple[int, ...]:
    if args.cap is not None:
        return (args.cap,)
    if args.cap_schedule:
        return parse_cap_schedule(args.cap_schedule)
    return get_settings().cap_schedule


def cmd_solve(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    assume = args.assume_complete or get_settings().assume_complete
    with stopwatch() as clock:
        result = realizability(f, sig, caps=_caps(args), assume_complete=assume)
    verdict = result.verdict
    extra = {"fragment": result.fragment.name}
    if getattr(verdict, "strategy", None) is not None and args.strategy:
        extra["strategy"] = dict(verdict.strategy.choices)
    report = RunReport("solve", {"file": args.file}, verdict.kind, verdict.cap, result.data, clock[0], extra)
    cap = "" if verdict.cap is None else f" (cap {verdict.cap})"
    _emit(args, report, f"{verdict.kind}{cap}  [{result.fragment.name}]")
    return _verdict_exit(verdict.kind)


def cmd_frames(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    sig2, g = prepare(f, sig)
    ctx = FrameContext.for_formula(g, sig2)
    counts = frame_counts(ctx)
    report = RunReport("frames", {"file": args.file}, stats=counts, extra={"l": ctx.l, "mode": ctx.mode})
    _emit(args, report, _table(counts))
    return 0


def cmd_automaton(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    sig2, g = prepare(f, sig)
    atoms, skeleton = build_atoms(g, FrameContext.for_formula(g, sig2))
    dpa = build_dpa(skeleton, len(atoms))
    report = RunReport("automaton", {"file": args.file}, stats={"atoms": len(atoms), "states": dpa.size})
    _emit(args, report, to_dot(dpa))
    return 0


# --------------------------------------------------------------------------- reductions and VASS


def cmd_reduce(args: argparse.Namespace) -> int:
    if args.direction == "lrv2vass":
        sig, f = load_formula(args.file)
        _, _, flags, game, trace = reduce_formula(f, sig)
        out = format_vass(game)
        report = RunReport("reduce lrv2vass", {"file": args.file}, stats=trace.stats, extra={"fragment": flags.name})
    else:
        game = normalize_vass_for_lrv(parse_vass(Path(args.file).read_text(encoding="utf-8")))
        sig, f = vass_to_lrv(game)
        out = format_document(sig, f)
        report = RunReport("reduce vass2lrv", {"file": args.file}, extra={"fragment": classify_fragment(f, sig).name})
    if args.output:
        Path(args.output).write_text(out + "\n", encoding="utf-8")
        out = ""
    _emit(args, report, out)
    return 0


def cmd_vass(args: argparse.Namespace) -> int:
    game = parse_vass(Path(args.file).read_text(encoding="utf-8"))
    inputs = {"file": args.file}
    if args.action == "validate":
        diag = validate(game)
        report = RunReport("vass validate", inputs, extra={"errors": list(diag.errors), "warnings": list(diag.warnings)})
        lines = [f"error: {e}" for e in diag.errors] + [f"warning: {w}" for w in diag.warnings]
        _emit(args, report, "\n".join(lines) or "ok")
        return 0 if diag.ok else EXIT_ERROR
    if args.action == "normalize":
        out = format_vass(normalize_vass_for_lrv(game))
        _emit(args, RunReport("vass normalize", inputs, extra={"game": json.loads(out)}), out)
        return 0
    with stopwatch() as clock:
        result = solve_energy(game, _caps(args), assume_complete=args.assume_complete or get_settings().assume_complete)
    v = result.verdict
    report = RunReport("vass solve", inputs, v.kind, v.cap, result.data, clock[0])
    _emit(args, report, f"{v.kind}" + ("" if v.cap is None else f" (cap {v.cap})"))
    return _verdict_exit(v.kind)


# --------------------------------------------------------------------------- machines


def cmd_encode(args: argparse.Namespace) -> int:
    cm = load_cm(args.machine)
    kwargs = {"data_labels": True} if args.data_labels else {}
    if kwargs and args.kind not in ("future", "lossy"):
        raise ValueError("--data-labels only applies to the future and lossy encodings")
    enc = ENCODERS[args.kind](cm, **kwargs)
    flags = classify_fragment(enc.formula, enc.signature)
    report = RunReport(
        f"encode {args.kind}",
        {"machine": args.machine},
        extra={"fragment": flags.name, "env_parts": list(enc.env_parts), "sys_parts": list(enc.sys_parts)},
    )
    text = format_document(enc.signature, enc.formula)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        text = ""
    _emit(args, report, text)
    return 0


def cmd_machine(args: argparse.Namespace) -> int:
    table = run_bounded(load_cm(args.file), args.steps)
    _emit(args, RunReport("machine run", {"file": args.file, "steps": args.steps}, stats=table), _table(table))
    return 0


# --------------------------------------------------------------------------- plays


_PREFIX_EXIT = {ThreeValued.DefinitelyTrue: EXIT_SYS, ThreeValued.DefinitelyFalse: EXIT_ENV, ThreeValued.Undetermined: EXIT_UNKNOWN}


def cmd_play(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    env = load_script(args.env_script, sig, "env")
    sysp = load_script(args.sys_script, sig, "sys")
    model = play(sig, env, sysp, args.rounds)
    verdict = check_prefix(model, f)
    rows = [{"position": i, **dict(v.bools), **dict(v.datas)} for i, v in enumerate(model, start=1)]
    table = pd.DataFrame(rows)
    report = RunReport(
        "play",
        {"file": args.file, "env": args.env_script, "sys": args.sys_script, "rounds": args.rounds},
        verdict.value,
        stats=table,
        extra={"precision": prefix_precision(f)},
    )
    _emit(args, report, f"{_table(table)}\n{verdict.value}")
    return _PREFIX_EXIT[verdict]


def cmd_oracle(args: argparse.Namespace) -> int:
    sig, f = load_formula(args.file)
    jobs = args.jobs or get_settings().jobs
    with stopwatch() as clock:
        result = finite_minimax(sig, f, args.horizon, args.pool, jobs=jobs)
    if isinstance(result, EnvForcesFalseBy):
        verdict, text, code = "EnvForcesFalseBy", f"EnvForcesFalseBy({result.rounds})", EXIT_ENV
        stats = {"rounds": result.rounds}
    else:
        verdict, text, code = "SysCanAvoidLossUpTo", f"SysCanAvoidLossUpTo({result.horizon})", EXIT_UNKNOWN
        stats = {"horizon": result.horizon}
    report = RunReport("oracle minimax", {"file": args.file, "horizon": args.horizon, "pool": args.pool}, verdict,
                       stats=stats, wall_time=clock[0])
    _emit(args, report, text)
    return code


# --------------------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON run report on stdout")
    common.add_argument("--log-level", default=None, help="logging level name (default LRVG_LOG_LEVEL or WARNING)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized steps (default LRVG_SEED)")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default LRVG_JOBS)")

    parser = _Parser(prog="lrvg", description="Games with repeating-values winning conditions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def formula_cmd(name: str, fn, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p.add_argument("file", help="formula file")
        p.set_defaults(func=fn)
        return p

    formula_cmd("parse", cmd_parse, "parse and pretty-print a formula file")
    formula_cmd("classify", cmd_classify, "report the fragment flags")
    formula_cmd("frames", cmd_frames, "count frames per level")
    formula_cmd("automaton", cmd_automaton, "parity automaton of the formula skeleton as DOT")

    caps_help = (
        f"comma-separated increasing caps (default {','.join(map(str, DEFAULT_CAP_SCHEDULE))}: cap 0 already decides "
        "games that need no counter credit, and arenas grow as (cap+1)^counters)"
    )

    solve = formula_cmd("solve", cmd_solve, "decide realizability of a single-sided game")
    solve.add_argument("--cap", type=int, default=None, help="single counter cap")
    solve.add_argument("--cap-schedule", default=None, help=caps_help)
    solve.add_argument("--assume-complete", action="store_true", help="treat Unknown at the last cap as EnvironmentWins")
    solve.add_argument("--strategy", action="store_true", help="include the winning strategy table in the JSON report")

    reduce = sub.add_parser("reduce", parents=[common], help="translate between formulas and VASS games")
    reduce.add_argument("direction", choices=["lrv2vass", "vass2lrv"])
    reduce.add_argument("file")
    reduce.add_argument("-o", "--output", default=None)
    reduce.set_defaults(func=cmd_reduce)

    vass = sub.add_parser("vass", parents=[common], help="single-sided VASS games")
    vass.add_argument("action", choices=["solve", "validate", "normalize"])
    vass.add_argument("file")
    vass.add_argument("--cap", type=int, default=None)
    vass.add_argument("--cap-schedule", default=None, help=caps_help)
    vass.add_argument("--assume-complete", action="store_true")
    vass.set_defaults(func=cmd_vass)

    encode = sub.add_parser("encode", parents=[common], help="encode a counter machine as a game formula")
    encode.add_argument("kind", choices=sorted(ENCODERS))
    encode.add_argument("machine", help="counter machine file")
    encode.add_argument("--data-labels", action="store_true", help="system labels as data equalities")
    encode.add_argument("-o", "--output", default=None)
    encode.set_defaults(func=cmd_encode)

    machine = sub.add_parser("machine", parents=[common], help="counter machines")
    machine.add_argument("action", choices=["run"])
    machine.add_argument("file")
    machine.add_argument("--steps", type=int, default=100)
    machine.set_defaults(func=cmd_machine)

    play_p = formula_cmd("play", cmd_play, "play scripted strategies and check the prefix")
    play_p.add_argument("--env-script", required=True)
    play_p.add_argument("--sys-script", required=True)
    play_p.add_argument("--rounds", type=int, default=10)

    oracle = sub.add_parser("oracle", parents=[common], help="finite-horizon oracles")
    oracle.add_argument("method", choices=["minimax"])
    oracle.add_argument("file")
    oracle.add_argument("--horizon", type=int, default=3)
    oracle.add_argument("--pool", type=int, default=None, help="data ids available (default (h+1)*|data|+1)")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings()
        level = (args.log_level or settings.log_level).upper()
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    random.seed(settings.seed if args.seed is None else args.seed)
    try:
        return args.func(args)
    except UnsupportedFragmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except FormulaSyntaxError as exc:
        print(f"error: {exc}\n\nformula grammar:\n{GRAMMAR_EXCERPT}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
