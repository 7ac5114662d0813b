"""Fuzzing campaigns: corpora, scheduling, execution, crash buckets and reports.

One scheduler produces edits sequentially from the campaign seed; a thread
pool only runs the harness. The sequence of edits therefore depends on the
seed alone, whatever the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import random
import shutil
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .constructs import ContractError
from .grammar import ParseError, TokenizeError
from .harness import Counter, HarnessSpec, RunResult, execute
from .mutators import Edit, Rejected, mutate, render
from .program import Program, data_dir, load_dir, load_language
from .styles import STYLES, admissible_pairs, extract_pool

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """A problem with the campaign setup; nothing has been run."""


@dataclass
class CampaignConfig:
    optimization_corpus_dir: Path
    seed_corpus_dir: Path
    harness: HarnessSpec
    output_dir: Path
    mode: str = "targeted"
    language: str | None = "mini-c"
    grammar_path: Path | None = None
    annotation_path: Path | None = None
    iterations: int | None = 100
    seconds: float | None = None
    rng_seed: int = 0
    weights: dict = field(default_factory=dict)  # (style, mutator) -> weight
    workers: int = 1
    scheduler: str = "style"
    retries: int = 4
    bounds: dict = field(default_factory=dict)
    cap: int = 64
    verify: bool = True
    keep_programs: bool = False

    def summary(self) -> dict:
        return {"mode": self.mode, "language": self.language, "scheduler": self.scheduler,
                "rng_seed": self.rng_seed, "iterations": self.iterations, "seconds": self.seconds,
                "workers": self.workers,
                "weights": {f"{s}/{m}": w for (s, m), w in sorted(self.weights.items())}}


def _pair_key(text: str) -> tuple:
    if "/" not in text:
        raise ConfigError(f"weight key {text!r} must look like Style/Mutator")
    style, mut = text.split("/", 1)
    if (style, mut) not in admissible_pairs():
        raise ConfigError(f"{style}/{mut} is not an admissible style/mutator pair")
    return style, mut


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> CampaignConfig:
    base_dir = Path(base_dir)

    def path(value):
        if value is None:
            return None
        p = Path(str(value).replace("{data}", str(data_dir())))
        return p if p.is_absolute() else base_dir / p

    try:
        h = raw["harness"]
        counters = [Counter.make(c["name"], c["pattern"]) for c in h.get("counters", [])]
        placeholders = {"data": str(data_dir()), "config_dir": str(base_dir)}
        harness = HarnessSpec(
            command=list(h["command"]),
            timeout_ms=int(h.get("timeout_ms", 10_000)),
            counters=counters,
            pass_name=str(h.get("pass", "")),
            prep=[str(a) for a in h.get("prep", [])],
            validity_command=list(h["validity_command"]) if h.get("validity_command") else None,
            env=dict(h.get("env", {})),
            placeholders=placeholders,
        )
        budget = raw.get("budget", {})
        weights = {_pair_key(k): float(v) for k, v in raw.get("weights", {}).items()}
        cfg = CampaignConfig(
            optimization_corpus_dir=path(raw["optimization_corpus"]),
            seed_corpus_dir=path(raw["seed_corpus"]),
            harness=harness,
            output_dir=Path(str(raw.get("output_dir", "out"))),  # relative to the working directory
            mode=raw.get("mode", "targeted"),
            language=raw.get("language", "mini-c" if "grammar" not in raw else None),
            grammar_path=path(raw.get("grammar")),
            annotation_path=path(raw.get("annotations")),
            iterations=budget.get("iterations", 100),
            seconds=budget.get("seconds"),
            rng_seed=int(raw.get("rng_seed", 0)),
            weights=weights,
            workers=int(raw.get("workers", 1)),
            scheduler=raw.get("scheduler", "style"),
            retries=int(raw.get("retries", 4)),
            bounds={k: dict(v) for k, v in raw.get("bounds", {}).items()},
            cap=int(raw.get("cap", 64)),
            verify=bool(raw.get("verify", True)),
            keep_programs=bool(raw.get("keep_programs", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def validate(cfg: CampaignConfig) -> None:
    if cfg.mode not in ("targeted", "pipeline"):
        raise ConfigError(f"mode must be targeted or pipeline, not {cfg.mode!r}")
    if cfg.mode == "targeted" and not cfg.harness.pass_name:
        raise ConfigError("targeted mode needs harness.pass")
    if cfg.scheduler not in ("style", "baseline"):
        raise ConfigError(f"scheduler must be style or baseline, not {cfg.scheduler!r}")
    if any(w < 0 for w in cfg.weights.values()):
        raise ConfigError("weights must be nonnegative")
    if cfg.weights and not any(w > 0 for w in cfg.weights.values()):
        raise ConfigError("weights are all zero")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.iterations is None and cfg.seconds is None:
        raise ConfigError("budget needs iterations or seconds")
    for style, b in cfg.bounds.items():
        if style not in STYLES:
            raise ConfigError(f"bounds for unknown style {style!r}")
        try:
            STYLES[style].bounds(b)
        except KeyError as exc:
            raise ConfigError(f"unknown bound {exc.args[0]!r} for {style}") from None


def load_config(path) -> CampaignConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        raw = tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw, path.parent)


# --------------------------------------------------------------------------
# corpora and scheduling


@dataclass
class Corpora:
    lang: object
    pool: object
    donors: dict
    recipients: list
    skipped: list


def load_corpora(cfg: CampaignConfig) -> Corpora:
    try:
        lang = load_language(cfg.language, cfg.grammar_path, cfg.annotation_path)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    for d in (cfg.optimization_corpus_dir, cfg.seed_corpus_dir):
        if not Path(d).is_dir():
            raise ConfigError(f"corpus directory {d} does not exist")
    donors, skipped_d = load_dir(lang, cfg.optimization_corpus_dir)
    recipients, skipped_s = load_dir(lang, cfg.seed_corpus_dir)
    if not recipients:
        raise ConfigError("seed corpus is empty")
    corpus = [(p.pid, p.root, p.chains) for p in donors]
    pool = extract_pool(corpus, bounds=cfg.bounds, cap=cfg.cap)
    if len(pool) == 0:
        raise ConfigError("optimization corpus yields no composition styles")
    return Corpora(lang, pool, {p.pid: p for p in donors}, recipients, skipped_d + skipped_s)


def iteration_seed(seed: int, i: int) -> int:
    return int.from_bytes(hashlib.sha256(f"{seed}:{i}".encode()).digest()[:8], "big")


@dataclass
class Attempt:
    """What the scheduler produced for one iteration."""

    iteration: int
    style: str
    mutator: str
    donor_id: str = ""
    recipient_id: str = ""
    seed: int = 0
    text: str | None = None
    reparse_ok: bool = False
    rejects: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.text is not None

    @property
    def pair(self) -> str:
        return f"{self.style}/{self.mutator}"

    def record(self) -> dict:
        return {"iteration": self.iteration, "style": self.style, "mutator": self.mutator,
                "donor": self.donor_id, "recipient": self.recipient_id, "seed": self.seed,
                "status": "ok" if self.ok else "rejected", "rejects": self.rejects,
                "sha256": hashlib.sha256(self.text.encode()).hexdigest() if self.ok else None}


class StyleScheduler:
    """Weighted draw of (style, mutator), then donor match, then recipient."""

    def __init__(self, corpora: Corpora, weights: dict, retries: int = 4, verify: bool = True):
        self.c = corpora
        self.retries = retries
        self.verify = verify
        available = set(corpora.pool.styles())
        if weights:
            table = {p: w for p, w in weights.items() if w > 0}
        else:
            table = {p: 1.0 for p in admissible_pairs()}
        self.pairs = sorted(p for p in table if p[0] in available)
        self.weights = [table[p] for p in self.pairs]
        if not self.pairs:
            raise ConfigError("no weighted style has matches in the optimization corpus")

    def draw_pair(self, rng: random.Random) -> tuple:
        return rng.choices(self.pairs, self.weights)[0]

    def next(self, i: int, seed: int) -> Attempt:
        rng = random.Random(iteration_seed(seed, i))
        style, mut = self.draw_pair(rng)
        match = rng.choice(self.c.pool.matches(style))
        donor = self.c.donors[match.donor_id]
        att = Attempt(i, style, mut, donor.pid)
        for _ in range(self.retries + 1):
            recipient = rng.choice(self.c.recipients)
            mseed = rng.getrandbits(63)
            att.recipient_id, att.seed = recipient.pid, mseed
            try:
                out = mutate(match, donor, recipient, mut, mseed, self.verify)
            except Rejected as exc:
                att.rejects.append(exc.reason)
                continue
            except (ContractError, RecursionError) as exc:
                log.error("internal error on iteration %d: %s", i, exc)
                att.rejects.append("InternalError")
                continue
            att.text, att.reparse_ok, att.provenance = out.text, out.reparse_ok, out.provenance
            return att
        return att


class BaselineScheduler:
    """Reference scheduler: swap a random recipient subtree for a same-kind donor subtree."""

    STYLE, MUTATOR = "baseline", "SubtreeSwap"

    def __init__(self, corpora: Corpora, retries: int = 20):
        self.c = corpora
        self.retries = retries
        self.by_kind: dict = {}
        for pid in sorted(corpora.donors):
            prog = corpora.donors[pid]
            for node in prog.tree.preorder():
                if node.token is None and node.n_tokens > 0 and node.parent is not None:
                    self.by_kind.setdefault(node.kind, []).append((prog, node))
        self.pairs = [(self.STYLE, self.MUTATOR)]

    def next(self, i: int, seed: int) -> Attempt:
        rng = random.Random(iteration_seed(seed, i))
        recipient = rng.choice(self.c.recipients)
        att = Attempt(i, self.STYLE, self.MUTATOR, recipient_id=recipient.pid)
        nodes = [n for n in recipient.tree.preorder()
                 if n.token is None and n.n_tokens > 0 and n.parent is not None]
        for _ in range(self.retries):
            if not nodes:
                break
            target = rng.choice(nodes)
            cands = self.by_kind.get(target.kind)
            if not cands:
                continue
            donor, node = rng.choice(cands)
            lo, hi = target.token_span
            text, _ = render(recipient, [Edit(lo, hi + 1, [l.token for l in node.leaves()])])
            att.donor_id, att.text = donor.pid, text
            try:
                Program.build(recipient.lang, text, recipient.pid + "+")
                att.reparse_ok = True
            except (ParseError, TokenizeError):
                att.reparse_ok = False
            att.provenance = {"donor_id": donor.pid, "recipient_id": recipient.pid, "style": self.STYLE,
                              "kind": self.MUTATOR, "rng_seed": iteration_seed(seed, i),
                              "swap": {"kind": target.kind, "recipient_span": [lo, hi],
                                       "donor_span": list(node.token_span)}}
            return att
        att.rejects.append("NoSwapCandidate")
        return att


# --------------------------------------------------------------------------
# running


def _execute_checked(spec: HarnessSpec, path: Path, iid: str, parse_ok: bool) -> tuple:
    result = execute(spec, str(path), iid, parse_ok)
    recheck = None
    if result.crashed:
        recheck = execute(spec, str(path), iid, parse_ok)
    return result, recheck


class Report:
    def __init__(self, cfg: CampaignConfig, pairs: list, skipped: list):
        self.cfg = cfg
        self.iterations = 0
        self.executed = 0
        self.valid = 0
        self.triggers: dict = {c.name: 0 for c in cfg.harness.counters}
        self.crashes: dict = {}
        self.flaky: dict = {}
        self.exits: dict = {}
        self.pairs = {f"{s}/{m}": {"attempts": 0, "successes": 0, "rejects": {}, "triggers": 0, "crashes": 0}
                      for s, m in pairs}
        self.minutes: dict = {}
        self.skipped = list(skipped)
        self.interrupted = False
        self.started = time.monotonic()

    def add(self, att: Attempt, result: RunResult | None, crash_bucket: str | None):
        self.iterations += 1
        stats = self.pairs.setdefault(att.pair, {"attempts": 0, "successes": 0, "rejects": {},
                                                 "triggers": 0, "crashes": 0})
        stats["attempts"] += 1
        for r in att.rejects:
            stats["rejects"][r] = stats["rejects"].get(r, 0) + 1
        minute = int((time.monotonic() - self.started) // 60)
        bucket = self.minutes.setdefault(minute, {"iterations": 0, "valid": 0, "triggers": 0, "crashes": 0})
        bucket["iterations"] += 1
        if result is None:
            return
        stats["successes"] += 1
        self.executed += 1
        self.exits[result.exit] = self.exits.get(result.exit, 0) + 1
        if result.valid:
            self.valid += 1
            bucket["valid"] += 1
        n = sum(result.triggers.values())
        for k, v in result.triggers.items():
            self.triggers[k] = self.triggers.get(k, 0) + v
        stats["triggers"] += n
        bucket["triggers"] += n
        if crash_bucket:
            stats["crashes"] += 1
            bucket["crashes"] += 1

    def to_dict(self) -> dict:
        return {
            "config": self.cfg.summary(),
            "totals": {
                "iterations": self.iterations,
                "executed": self.executed,
                "valid_count": self.valid,
                "validity_rate": self.valid / self.iterations if self.iterations else 0.0,
                "triggers": dict(sorted(self.triggers.items())),
                "trigger_total": sum(self.triggers.values()),
                "exits": dict(sorted(self.exits.items())),
                "crashes": {k: self.crashes[k] for k in sorted(self.crashes)},
                "flaky": {k: self.flaky[k] for k in sorted(self.flaky)},
                "skipped_files": len(self.skipped),
                "interrupted": self.interrupted,
            },
            "pairs": {k: self.pairs[k] for k in sorted(self.pairs)},
            "throughput": [{"minute": m, **self.minutes[m]} for m in sorted(self.minutes)],
            "timing": {"elapsed_s": round(time.monotonic() - self.started, 3)},
        }


def throughput_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["minute", "iterations", "valid", "triggers", "crashes"])
    for row in report.get("throughput", []):
        w.writerow([row["minute"], row["iterations"], row["valid"], row["triggers"], row["crashes"]])
    return buf.getvalue()


def _store_crash(out: Path, sig: str, att: Attempt, ext: str, result: RunResult, sub: str = "crashes") -> str:
    d = out / sub / sig
    d.mkdir(parents=True, exist_ok=True)
    repro = d / f"reproducer{ext}"
    repro.write_text(att.text, encoding="utf-8")
    prov = dict(att.provenance, iteration=att.iteration, signature=sig, exit=result.exit,
                stderr=result.stderr[-4000:])
    (d / "provenance.json").write_text(json.dumps(prov, indent=2, sort_keys=True, default=str) + "\n",
                                      encoding="utf-8")
    return str(repro.relative_to(out))


def run_campaign(cfg: CampaignConfig, stop: threading.Event | None = None) -> dict:
    """Run until the budget is spent (or ``stop`` is set); returns the report dict."""
    stop = stop or threading.Event()
    corpora = load_corpora(cfg)
    if cfg.scheduler == "baseline":
        scheduler = BaselineScheduler(corpora)
    else:
        scheduler = StyleScheduler(corpora, cfg.weights, cfg.retries, cfg.verify)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    work = out / "work"
    work.mkdir(exist_ok=True)
    ext = corpora.lang.extension
    report = Report(cfg, scheduler.pairs, corpora.skipped)
    edits_log = open(out / "edits.jsonl", "w", encoding="utf-8")
    pending: deque = deque()
    t0 = time.monotonic()

    def settle(att: Attempt, fut):
        result = None
        bucket = None
        record = att.record()
        if fut is not None:
            result, recheck = fut.result()
            record.update(exit=result.exit, code=result.code, triggers=result.triggers,
                          valid=result.valid, crash_signature=result.crash_signature)
            if result.crashed:
                sig = result.crash_signature
                if recheck is not None and recheck.crash_signature == sig:
                    bucket = sig
                    entry = report.crashes.get(sig)
                    if entry is None:
                        path = _store_crash(out, sig, att, ext, result)
                        report.crashes[sig] = {"count": 1, "reproducer": path, "first_iteration": att.iteration}
                    else:
                        entry["count"] += 1
                else:
                    entry = report.flaky.get(sig)
                    if entry is None:
                        path = _store_crash(out, sig, att, ext, result, "flaky")
                        report.flaky[sig] = {"count": 1, "reproducer": path, "first_iteration": att.iteration}
                    else:
                        entry["count"] += 1
            path = work / f"iter-{att.iteration:06d}{ext}"
            if not cfg.keep_programs:
                path.unlink(missing_ok=True)
        report.add(att, result, bucket)
        edits_log.write(json.dumps(record, sort_keys=True) + "\n")

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            i = 0
            while not stop.is_set():
                if cfg.iterations is not None and i >= cfg.iterations:
                    break
                if cfg.seconds is not None and time.monotonic() - t0 >= cfg.seconds:
                    break
                att = scheduler.next(i, cfg.rng_seed)
                fut = None
                if att.ok:
                    path = work / f"iter-{att.iteration:06d}{ext}"
                    path.write_text(att.text, encoding="utf-8")
                    fut = pool.submit(_execute_checked, cfg.harness, path, f"iter-{i}", att.reparse_ok)
                pending.append((att, fut))
                while len(pending) > 2 * cfg.workers:
                    settle(*pending.popleft())
                i += 1
            while pending:
                settle(*pending.popleft())
    finally:
        edits_log.close()
        report.interrupted = stop.is_set()
        data = report.to_dict()
        write_report(out, data)
        if not cfg.keep_programs:
            shutil.rmtree(work, ignore_errors=True)
    return data


def write_report(out: Path, data: dict) -> None:
    (out / "report.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.csv").write_text(throughput_csv(data), encoding="utf-8")


def deterministic_view(report: dict) -> dict:
    """Report fields that must not depend on timing or on the worker count."""
    out = {k: v for k, v in report.items() if k not in ("timing", "throughput")}
    if "config" in out:
        out["config"] = {k: v for k, v in out["config"].items() if k != "workers"}
    return out
