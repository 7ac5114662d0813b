"""Command-line entry point.

Exit codes: 0 ok, 1 bad input data, 2 usage or configuration, 3 environment
(the harness could not be started), 4 the requested edit was rejected.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import signal
import sys
import threading
from pathlib import Path

from .campaign import ConfigError, load_config, run_campaign
from .constructs import AnnotationError
from .grammar import GrammarError, ParseError, TokenizeError
from .harness import SpawnError
from .mutators import NotAllowed, Rejected, mutate
from .program import Program, load_language
from .report import load_report, pairs_csv, summary_line, table
from .styles import MUTATORS, STYLES, scan

OK, DATA, USAGE, ENV, REJECTED = 0, 1, 2, 3, 4


class Usage(Exception):
    pass


def _lang_for(args, path=None):
    if args.grammar:
        return load_language(None, args.grammar, args.annotations)
    name = args.lang
    if name is None:
        name = "mini-ir" if path is not None and str(path).endswith(".mlir") else "mini-c"
    try:
        return load_language(name)
    except ValueError as exc:
        raise Usage(str(exc)) from None


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise Usage(f"cannot read {path}: {exc.strerror}") from None


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def parse_bounds(text: str | None, style_name: str) -> dict:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise Usage(f"bad bound {part!r}; expected name=value")
        key, value = (s.strip() for s in part.split("=", 1))
        try:
            out[key] = int(value)
        except ValueError:
            raise Usage(f"bound {key} needs an integer, got {value!r}") from None
    try:
        STYLES[style_name].bounds(out)
    except KeyError as exc:
        raise Usage(str(exc.args[0])) from None
    return out


def cmd_parse(args) -> int:
    lang = _lang_for(args, args.program)
    source = _read(args.program)
    prog = Program.build(lang, source, Path(args.program).name)
    if args.emit == "parse-tree":
        _emit(prog.tree.to_dict())
    elif args.emit == "construct-tree":
        _emit(prog.root.to_dict())
    else:
        _emit(prog.chains.to_dict())
    return OK


def _corpus_files(path: Path) -> list:
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise Usage(f"{path} is not a file or directory")
    return sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))


def cmd_scan(args) -> int:
    styles = [args.style] if args.style else list(STYLES)
    for s in styles:
        if s not in STYLES:
            raise Usage(f"unknown style {s!r}; choose from {', '.join(STYLES)}")
    if args.bounds and not args.style:
        raise Usage("--bounds needs --style")
    bounds = parse_bounds(args.bounds, args.style) if args.style else {}
    files = _corpus_files(Path(args.corpus))
    status = OK
    for path in files:
        lang = _lang_for(args, path)
        try:
            prog = Program.build(lang, _read(path), path.name)
        except (ParseError, TokenizeError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = DATA
            continue
        for s in styles:
            for m in scan(s, prog.root, prog.chains, bounds if s == args.style else None, cap=args.cap,
                          donor_id=path.name):
                sys.stdout.write(json.dumps(m.to_dict(), sort_keys=True) + "\n")
    return status


def cmd_mutate(args) -> int:
    if args.style not in STYLES:
        raise Usage(f"unknown style {args.style!r}")
    if args.mutator not in STYLES[args.style].allowed_mutators:
        raise Usage(f"mutator not allowed for style: {args.mutator} with {args.style}")
    lang = _lang_for(args, args.recipient)
    donor = Program.build(lang, _read(args.donor), Path(args.donor).name)
    recipient = Program.build(lang, _read(args.recipient), Path(args.recipient).name)
    matches = scan(args.style, donor.root, donor.chains, donor_id=donor.pid)
    if not matches:
        print(f"rejected: donor has no {args.style} match", file=sys.stderr)
        return REJECTED
    order = list(range(len(matches)))
    random.Random(args.seed).shuffle(order)
    first = None
    for i in order:
        try:
            out = mutate(matches[i], donor, recipient, args.mutator, args.seed)
        except Rejected as exc:
            first = first or exc
            continue
        except NotAllowed as exc:
            raise Usage(str(exc)) from None
        if args.output:
            Path(args.output).write_text(out.text, encoding="utf-8")
            prov_path = args.provenance or f"{args.output}.json"
        else:
            sys.stdout.write(out.text)
            prov_path = args.provenance
        if prov_path:
            Path(prov_path).write_text(json.dumps(out.provenance, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
        return OK
    print(f"rejected: {first}", file=sys.stderr)
    return REJECTED


def cmd_fuzz(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise Usage(str(exc)) from None
    if args.iterations is not None:
        cfg.iterations = args.iterations
    if args.seed is not None:
        cfg.rng_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.output is not None:
        cfg.output_dir = Path(args.output)
    stop = threading.Event()
    previous = signal.getsignal(signal.SIGINT)
    in_main = threading.current_thread() is threading.main_thread()
    if in_main:
        signal.signal(signal.SIGINT, lambda *_: stop.set())
    try:
        report = run_campaign(cfg, stop)
    except ConfigError as exc:
        raise Usage(str(exc)) from None
    except SpawnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV
    finally:
        if in_main:
            signal.signal(signal.SIGINT, previous)
    print(summary_line(report))
    return OK


def cmd_report(args) -> int:
    report = load_report(args.output_dir)
    if report is None:
        print("no report found", file=sys.stderr)
        return DATA
    sys.stdout.write(pairs_csv(report) if args.format == "csv" else table(report))
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stylefuzz", description="Composition-style fuzzing of compiler passes.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def lang_flags(p):
        p.add_argument("--lang", help="built-in language (mini-c, mini-ir); default from file extension")
        p.add_argument("--grammar", help="grammar file (overrides --lang)")
        p.add_argument("--annotations", help="annotation file for --grammar")

    p = sub.add_parser("parse", help="parse one program and print a tree as JSON")
    lang_flags(p)
    p.add_argument("program")
    p.add_argument("--emit", choices=("parse-tree", "construct-tree", "decl-use"), default="construct-tree")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("scan", help="print style matches as JSON lines")
    lang_flags(p)
    p.add_argument("corpus", help="program file or directory")
    p.add_argument("--style")
    p.add_argument("--bounds", help="comma-separated name=value, e.g. k=0,d=0")
    p.add_argument("--cap", type=int, default=64, help="matches per program and style")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("mutate", help="apply one mutator to a recipient using a donor's style")
    lang_flags(p)
    p.add_argument("donor")
    p.add_argument("recipient")
    p.add_argument("--style", required=True)
    p.add_argument("--mutator", required=True, choices=MUTATORS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write the program here (default stdout)")
    p.add_argument("--provenance", help="write the provenance JSON here (default OUTPUT.json)")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("fuzz", help="run a campaign from a TOML config")
    p.add_argument("config")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="override output_dir")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("report", help="summarize a campaign output directory")
    p.add_argument("output_dir")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE
    except (GrammarError, AnnotationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (ParseError, TokenizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA


if __name__ == "__main__":
    sys.exit(main())
