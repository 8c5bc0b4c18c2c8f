"""Command line interface.

Exit codes: 0 accept / success, 1 reject / difference / invalid automaton,
2 usage error, 3 unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import lab
from .constructions import (alternating_to_cover, cover_consistent, cover_statistics,
                            iter_forbidden_windows)
from .core import Automaton, FinitePattern, Torus, classify, validate_automaton
from .errors import PlanewalkError
from .formats import (parse_automaton, parse_configuration, print_automaton,
                      print_configuration)
from .gallery import CATALOG, SOURCES, ORACLES, gallery_automaton, gallery_patterns
from .semantics import accepts


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def load_automaton_arg(spec: str) -> Automaton:
    """A path to an automaton JSON file, or ``gallery:NAME``."""
    if spec.startswith("gallery:"):
        try:
            return gallery_automaton(spec.split(":", 1)[1])
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    return parse_automaton(_read(spec))


def load_config_arg(spec: str, want: str | None = None):
    if spec.startswith("gallery:"):
        name = spec.split(":", 1)[1]
        pats = gallery_patterns()
        if name not in pats:
            raise InputError(f"unknown gallery pattern {name!r}; known: {sorted(pats)}")
        x = pats[name]
    else:
        x = parse_configuration(_read(spec))
    if want == "torus" and not isinstance(x, Torus):
        raise InputError(f"{spec}: expected a torus file (header 'torus p q')")
    if want == "pattern" and not isinstance(x, FinitePattern):
        raise InputError(f"{spec}: expected a pattern file, found a torus")
    return x


def _size(text: str) -> tuple[int, int]:
    w, _, h = text.lower().partition("x")
    try:
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _emit(args, records, text=None):
    if getattr(args, "json", False) or text is None:
        for r in records:
            print(lab.dumps(r))
    else:
        print(text)


# ------------------------------------------------------------------ commands


def cmd_validate(args) -> int:
    a = load_automaton_arg(args.automaton)
    problems = validate_automaton(a)
    if args.json:
        print(lab.dumps({"instance": args.automaton, "verdict": "valid" if not problems else "invalid",
                         "witness": {"violations": problems}}))
    elif problems:
        for p in problems:
            print(p)
    else:
        print("valid")
    return 0 if not problems else 1


def cmd_classify(args) -> int:
    a = load_automaton_arg(args.automaton)
    level = classify(a)
    _emit(args, [{"instance": args.automaton, "verdict": str(level)}], str(level))
    return 0


def cmd_accepts(args) -> int:
    a = load_automaton_arg(args.automaton)
    x = load_config_arg(args.torus or args.pattern, "torus" if args.torus else "pattern")
    rec = lab.acceptance_record(a, x, witness=args.witness, timing=args.timing)
    if args.json:
        print(lab.dumps(rec))
    else:
        print(rec["verdict"])
        if args.witness:
            print(json.dumps(rec["witness"], indent=2, ensure_ascii=False))
    return 0 if rec["verdict"] == "accept" else 1


def cmd_compare(args) -> int:
    a_auto = load_automaton_arg(args.a)
    left = lab.Decider(automaton=a_auto, name=args.a)
    if args.oracle:
        if args.oracle not in ORACLES:
            raise InputError(f"unknown oracle {args.oracle!r}; known: {sorted(ORACLES)}")
        right = lab.oracle_decider(args.oracle)
    elif args.b:
        b_auto = load_automaton_arg(args.b)
        if tuple(b_auto.alphabet) != tuple(a_auto.alphabet):
            if set(b_auto.alphabet) != set(a_auto.alphabet):
                raise InputError("the two automata have different alphabets")
        right = lab.Decider(automaton=b_auto, name=args.b)
    else:
        raise InputError("give a second automaton or --oracle")
    if not args.max_torus and not args.patterns:
        raise InputError("give --max-torus P Q and/or --patterns WxH")
    report = lab.compare(left, right, a_auto.alphabet,
                         max_torus=tuple(args.max_torus) if args.max_torus else None,
                         patterns=args.patterns, seed=args.seed, samples=args.samples,
                         jobs=args.jobs, timing=args.timing)
    _emit(args, report.records(args.all), report.text())
    return 0 if report.equivalent else 1


def cmd_enum(args) -> int:
    a = load_automaton_arg(args.automaton)
    if not args.max_torus and not args.patterns:
        raise InputError("give --max-torus P Q and/or --patterns WxH")
    recs = lab.enum_records(lab.Decider(automaton=a), a.alphabet,
                            max_torus=tuple(args.max_torus) if args.max_torus else None,
                            patterns=args.patterns, jobs=args.jobs, timing=args.timing)
    for r in recs:
        print(lab.dumps(r))
    return 0


def cmd_cover(args) -> int:
    a = load_automaton_arg(args.automaton)
    cover = alternating_to_cover(a)
    stats = cover_statistics(cover)
    records = [{"instance": args.automaton, "verdict": "cover", "witness": stats}]
    lines = [f"automaton: {args.automaton}",
             f"product alphabet: {stats['alphabet']} x 2^{stats['states']} = {stats['product_alphabet']}",
             f"window cells: {stats['window']}",
             f"centres failing clause 1 (state reads another symbol): {stats['clause1_centres']}",
             f"centres failing clause 2 (initial state missing): {stats['clause2_centres']}",
             f"locally consistent centres: {stats['locally_consistent_centres']}",
             f"states whose quantifier is checked by clause 3: {stats['clause3_candidate_states']}"]
    if args.enumerate:
        shown = 0
        for w in iter_forbidden_windows(cover, args.enumerate):
            shown += 1
            sets = [sorted(cover.state_set(p)) for p in w]
            cells = [{"offset": list(o), "symbol": p[0], "states": s}
                     for o, p, s in zip(cover.shape, w, sets)]
            records.append({"instance": "forbidden window", "verdict": cover.violations(w),
                            "witness": cells})
            lines.append("forbidden: " + "; ".join(
                f"{o}:{p[0]}{{{','.join(s)}}}" for o, p, s in zip(cover.shape, w, sets)))
        lines.append(f"listed {shown} forbidden windows (cap {args.enumerate})")
    if args.torus:
        t = load_config_arg(args.torus, "torus")
        ok = cover_consistent(a, t, cover)
        acc = accepts(a, t)
        records.append({"instance": lab.describe(t), "verdict": {"cover_consistent": ok, "accepts": acc}})
        lines.append(f"torus: cover_consistent={ok} accepts={acc}")
    _emit(args, records, "\n".join(lines))
    return 0


def cmd_pump(args) -> int:
    a = load_automaton_arg(args.automaton)
    x = load_config_arg(args.torus or args.pattern, "torus" if args.torus else "pattern")
    try:
        rec = lab.pump_record(a, x, args.cell)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    w = rec["witness"]
    lines = [f"{rec['verdict']} from {tuple(w['start'])}: branch of {len(w['steps'])} steps"
             + (f", lasso back to step {w['lasso']['cycle_start']} with drift {tuple(w['lasso']['drift'])}"
                if w["lasso"] else "")]
    for k, s in enumerate(w["steps"]):
        lines.append(f"  {k}: {tuple(s['cell'])} {s['state']} edge={s['edge']}")
    lines.append("replay: " + ("ok" if not w["replay_problems"] else "; ".join(w["replay_problems"])))
    for p in w["pumping_pairs"]:
        lines.append(f"pumping pair ({p['i']}, {p['j']}) vector {tuple(p['vector'])}")
    _emit(args, [rec], "\n".join(lines))
    return 0


def cmd_render(args) -> int:
    x = load_config_arg(args.config)
    sys.stdout.write(print_configuration(x))
    return 0


def cmd_gallery(args) -> int:
    if args.action == "list":
        recs = [{"instance": name, "verdict": str(classify(fn())),
                 "witness": {"source": SOURCES[name], "summary": desc}}
                for name, (desc, fn) in CATALOG.items()]
        text = "\n".join(f"{r['instance']:22} {r['verdict']:9} {r['witness']['source']}: "
                         f"{r['witness']['summary']}" for r in recs)
        text += "\npatterns: " + ", ".join(sorted(gallery_patterns()))
        text += "\noracles: " + ", ".join(sorted(ORACLES))
        _emit(args, recs, text)
    elif args.action == "show":
        if not args.name:
            raise InputError("gallery show needs a name")
        if args.name in CATALOG:
            sys.stdout.write(print_automaton(gallery_automaton(args.name)))
        elif args.name in gallery_patterns():
            sys.stdout.write(print_configuration(gallery_patterns()[args.name]))
        else:
            raise InputError(f"unknown gallery item {args.name!r}")
    elif args.action == "audit":
        recs = lab.f_audit()
        lines = ["n  strict(j<i)  non-strict(j<=i)  formula"]
        for r in recs:
            v = r["verdict"]
            lines.append(f"{r['instance']:6} {v['strict']:5} {v['non_strict']:10} {v['formula']:9}")
        _emit(args, recs, "\n".join(lines))
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planewalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, timing=False):
        sp.add_argument("--json", action="store_true", help="print JSON-lines records")
        if timing:
            sp.add_argument("--timing", action="store_true", help="add wall-clock millis to records")

    def bounds(sp):
        sp.add_argument("--max-torus", nargs=2, type=int, metavar=("P", "Q"))
        sp.add_argument("--patterns", type=_size, metavar="WxH")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    sp = sub.add_parser("validate", help="list violated automaton invariants")
    sp.add_argument("automaton")
    common(sp)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("classify", help="hierarchy level of an automaton")
    sp.add_argument("automaton")
    common(sp)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("accepts", help="decide acceptance on a torus or pattern")
    sp.add_argument("automaton")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--torus")
    g.add_argument("--pattern")
    sp.add_argument("--witness", action="store_true")
    common(sp, timing=True)
    sp.set_defaults(fn=cmd_accepts)

    sp = sub.add_parser("compare", help="compare two automata or an automaton and an oracle")
    sp.add_argument("a")
    sp.add_argument("b", nargs="?")
    sp.add_argument("--oracle", help=f"one of {', '.join(sorted(ORACLES))}")
    bounds(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--all", action="store_true", help="list every disagreement")
    common(sp, timing=True)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("enum", help="verdicts on every instance up to a bound")
    sp.add_argument("automaton")
    bounds(sp)
    common(sp, timing=True)
    sp.set_defaults(fn=cmd_enum)

    sp = sub.add_parser("cover", help="report on the powerset cover SFT")
    sp.add_argument("automaton")
    sp.add_argument("--enumerate", type=int, metavar="CAP", help="list up to CAP forbidden windows")
    sp.add_argument("--torus", help="check annotation consistency on this torus")
    common(sp)
    sp.set_defaults(fn=cmd_cover)

    sp = sub.add_parser("pump", help="extract a branch, replay it and list pumping pairs")
    sp.add_argument("automaton")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--torus")
    g.add_argument("--pattern")
    sp.add_argument("--cell", nargs=2, type=int, default=[0, 0], metavar=("X", "Y"))
    common(sp)
    sp.set_defaults(fn=cmd_pump)

    sp = sub.add_parser("render", help="print a pattern or torus in the text format")
    sp.add_argument("config", help="file, or gallery:NAME")
    sp.set_defaults(fn=cmd_render)

    sp = sub.add_parser("gallery", help="built-in automata, patterns and the f(n) audit")
    sp.add_argument("action", choices=["list", "show", "audit"])
    sp.add_argument("name", nargs="?")
    common(sp)
    sp.set_defaults(fn=cmd_gallery)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, PlanewalkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
