"""Running the compiler under test on one input and reading its output."""

from __future__ import annotations

import hashlib
import os
import re
import signal
import subprocess
import sys
import time
from dataclasses import dataclass, field

OUTPUT_CAP = 1 << 20

ASSERTION = re.compile(
    r"(Assertion .* failed|assert(?:ion)? failed|\bpanicked\b|LLVM ERROR|UNREACHABLE|"
    r"Segmentation fault|AddressSanitizer|Stack dump:)", re.IGNORECASE)
FRAME = re.compile(r"^\s*#\d+\s+\S")
_HEX = re.compile(r"0x[0-9a-fA-F]+")
_PATH = re.compile(r"(?:[A-Za-z]:)?(?:[\w.+-]*/)+([\w.+-]+)")
_LINE = re.compile(r"(:\d+)+\b")
_FRAME_NO = re.compile(r"^\s*#\d+\s+")
_SPACE = re.compile(r"\s+")


class SpawnError(RuntimeError):
    """The harness command could not be started at all."""


@dataclass(frozen=True)
class Counter:
    name: str
    pattern: re.Pattern

    @classmethod
    def make(cls, name: str, pattern: str) -> "Counter":
        rx = re.compile(pattern, re.MULTILINE)
        return cls(name, rx)

    def count(self, text: str) -> int:
        total = 0
        for m in self.pattern.finditer(text):
            groups = [g for g in m.groups() if g is not None]
            if groups:
                try:
                    total += int(groups[0])
                    continue
                except ValueError:
                    pass
            total += 1
        return total


@dataclass
class HarnessSpec:
    command: list
    timeout_ms: int = 10_000
    counters: list = field(default_factory=list)
    pass_name: str = ""
    prep: list = field(default_factory=list)
    validity_command: list | None = None
    env: dict = field(default_factory=dict)
    placeholders: dict = field(default_factory=dict)

    def __post_init__(self):
        if not any("{input}" in str(a) for a in self.command):
            raise ValueError("harness command must contain {input}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")

    def argv(self, template: list, input_path: str) -> list:
        values = {"input": str(input_path), "pass": self.pass_name, "python": sys.executable,
                  **self.placeholders}
        out = []
        for arg in template:
            arg = str(arg)
            if arg == "{prep}":
                out.extend(self.prep)
                continue
            for key, val in values.items():
                arg = arg.replace("{" + key + "}", str(val))
            out.append(arg)
        return out


@dataclass
class RunResult:
    input_id: str
    exit: str  # ok | nonzero | signal | timeout
    code: int | None
    duration_ms: float
    triggers: dict
    crash_signature: str
    valid: bool
    stderr: str = field(default="", repr=False)
    stdout: str = field(default="", repr=False)

    @property
    def crashed(self) -> bool:
        return bool(self.crash_signature)

    def to_dict(self) -> dict:
        return {"input_id": self.input_id, "exit": self.exit, "code": self.code,
                "duration_ms": round(self.duration_ms, 3), "triggers": self.triggers,
                "crash_signature": self.crash_signature, "valid": self.valid}


def _normalize(line: str) -> str:
    line = _FRAME_NO.sub("#N ", line)
    line = _HEX.sub("0xADDR", line)
    line = _PATH.sub(r"\1", line)
    line = _LINE.sub("", line)
    return _SPACE.sub(" ", line).strip()


def dedup_crash(stderr: str) -> str:
    """Stable 16-hex signature of the first assertion and stack-frame lines."""
    picked = [_normalize(l) for l in stderr.splitlines() if ASSERTION.search(l) or FRAME.match(l)]
    picked = picked[:5]
    if not picked:
        return "unknown-crash"
    return hashlib.sha256("\n".join(picked).encode()).hexdigest()[:16]


def _run(argv: list, env: dict, timeout_s: float):
    full_env = dict(os.environ)
    full_env.update({k: str(v) for k, v in env.items()})
    try:
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                stdin=subprocess.DEVNULL, env=full_env, start_new_session=True)
    except OSError as exc:
        raise SpawnError(f"cannot run {argv[0]!r}: {exc}") from exc
    try:
        out, err = proc.communicate(timeout=timeout_s)
        timed_out = False
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except OSError:
            proc.kill()
        out, err = proc.communicate()
        timed_out = True
    return proc.returncode, out[:OUTPUT_CAP], err[:OUTPUT_CAP], timed_out


def execute(spec: HarnessSpec, input_path: str, input_id: str = "", parse_ok: bool = True) -> RunResult:
    argv = spec.argv(spec.command, input_path)
    t0 = time.monotonic()
    code, out, err, timed_out = _run(argv, spec.env, spec.timeout_ms / 1000)
    duration = (time.monotonic() - t0) * 1000
    stdout = out.decode("utf-8", "replace")
    stderr = err.decode("utf-8", "replace")
    if timed_out:
        exit_kind, code = "timeout", None
    elif code < 0:
        exit_kind = "signal"
    elif code == 0:
        exit_kind = "ok"
    else:
        exit_kind = "nonzero"
    triggers = {}
    if exit_kind in ("ok", "nonzero"):
        text = stdout + "\n" + stderr
        triggers = {c.name: c.count(text) for c in spec.counters}
    asserted = any(ASSERTION.search(l) for l in stderr.splitlines())
    signature = dedup_crash(stderr) if exit_kind == "signal" or asserted else ""
    valid = parse_ok
    if spec.validity_command:
        vcode, _, _, vto = _run(spec.argv(spec.validity_command, input_path), spec.env,
                                spec.timeout_ms / 1000)
        valid = not vto and vcode == 0
    return RunResult(input_id, exit_kind, code, duration, triggers, signature, valid, stderr, stdout)
