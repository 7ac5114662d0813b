"""Stand-in pass that aborts whenever two same-kind loops are adjacent.

Prints an assertion message and a short stack to stderr, then calls abort(),
so the harness sees SIGABRT. The loop kind is part of the message, which
gives one crash bucket per kind.

Usage: crash_adjacent.py FILE
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from fake_opt import adjacent_loops  # noqa: E402


def main(argv):
    if not argv:
        print("usage: crash_adjacent.py FILE", file=sys.stderr)
        return 2
    with open(argv[-1], encoding="utf-8") as fh:
        text = fh.read()
    _, pairs = adjacent_loops(text)
    if not pairs:
        return 0
    kind = pairs[0][0]
    sys.stderr.write(
        f"opt: /build/src/LoopFuse.cpp:812: bool fuse(Loop *, Loop *): "
        f"Assertion `!adjacent({kind})' failed.\n"
        "Stack dump:\n"
        f"#0 0x{id(text) & 0xffffffff:08x} in fuse(Loop*, Loop*) /build/src/LoopFuse.cpp:812\n"
        f"#1 0x{os.getpid():08x} in runOnFunction /build/src/LoopFuse.cpp:901\n"
    )
    sys.stderr.flush()
    os.abort()


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
