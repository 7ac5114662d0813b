"""Stand-in for a loop-fusion pass.

Reads a mini-C or mini-IR file, counts pairs of same-kind loops that sit
next to each other in one statement list inside a function, and prints
``fused: N`` when there is at least one. A fused pair whose text contains
the number 1337 trips a planted assertion (exit status 1).

Usage: fake_opt.py [--pass NAME] FILE
"""

import sys

C_LOOPS = ("for", "while", "do")
IR_LOOPS = ("scf.for",)
PLANTED = "1337"
_TWO = {"->", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<=", ">=", "==", "!=",
        "&&", "||", "<<", ">>"}
_WORD = "_.$"


def tokenize(text):
    # hand-rolled on purpose: importing re would double the start-up time
    out, i, n = [], 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
        elif text.startswith("/*", i):
            j = text.find("*/", i + 2)
            i = n if j < 0 else j + 2
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            out.append(text[i:j + 1])
            i = j + 1
        elif c.isalnum() or c in "_%@":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in _WORD):
                j += 1
            out.append(text[i:j])
            i = j
        elif text[i:i + 2] in _TWO:
            out.append(text[i:i + 2])
            i += 2
        else:
            out.append(c)
            i += 1
    return out


def _close(toks, i):
    """Index of the bracket closing the one at i."""
    pairs = {"(": ")", "[": "]", "{": "}"}
    want, depth = pairs[toks[i]], 0
    for j in range(i, len(toks)):
        if toks[j] == toks[i]:
            depth += 1
        elif toks[j] == want:
            depth -= 1
            if depth == 0:
                return j
    return len(toks) - 1


def stmt_end(toks, i):
    """Index of the last token of the C statement starting at i."""
    if i >= len(toks):
        return len(toks) - 1
    t = toks[i]
    if t == "{":
        return _close(toks, i)
    if t in ("for", "while") and i + 1 < len(toks) and toks[i + 1] == "(":
        return stmt_end(toks, _close(toks, i + 1) + 1)
    if t == "do":
        body = stmt_end(toks, i + 1)
        if body + 2 < len(toks) and toks[body + 2] == "(":
            return _close(toks, body + 2) + 1
        return body
    if t == "if" and i + 1 < len(toks) and toks[i + 1] == "(":
        end = stmt_end(toks, _close(toks, i + 1) + 1)
        if end + 1 < len(toks) and toks[end + 1] == "else":
            return stmt_end(toks, end + 2)
        return end
    j = i
    while j < len(toks):
        if toks[j] in "([{":
            j = _close(toks, j)
        elif toks[j] == ";":
            return j
        elif toks[j] == "}":
            return j - 1
        j += 1
    return len(toks) - 1


def _c_pairs(toks):
    pairs = []
    blocks = set()
    for b, tok in enumerate(toks):
        if tok != "{" or b == 0 or toks[b - 1] in ("=", ","):
            continue
        if toks[b - 1] == "{" and b - 1 not in blocks:
            continue
        blocks.add(b)
        end = _close(toks, b)
        j, prev = b + 1, None
        while j < end:
            e = stmt_end(toks, j)
            kind = toks[j] if toks[j] in C_LOOPS else None
            if kind is not None and prev is not None and prev[0] == kind:
                pairs.append((kind, prev[1], e))
            prev = (kind, j) if kind else None
            j = max(e + 1, j + 1)
    return pairs


def _ir_pairs(toks):
    pairs = []
    for i, tok in enumerate(toks):
        if tok not in IR_LOOPS:
            continue
        j = i
        while j < len(toks) and toks[j] != "{":
            j += 1
        if j >= len(toks):
            continue
        end = _close(toks, j)
        if end + 1 < len(toks) and toks[end + 1] == tok:
            nxt = end + 1
            k = nxt
            while k < len(toks) and toks[k] != "{":
                k += 1
            pairs.append((tok, i, _close(toks, k) if k < len(toks) else len(toks) - 1))
    return pairs


def adjacent_loops(text):
    """(kind, first token, last token) for every adjacent same-kind loop pair."""
    toks = tokenize(text)
    if any(t in IR_LOOPS or t == "func.func" for t in toks):
        return toks, _ir_pairs(toks)
    return toks, _c_pairs(toks)


def main(argv):
    args = [a for a in argv if not a.startswith("--pass")]
    if not args:
        print("usage: fake_opt.py [--pass NAME] FILE", file=sys.stderr)
        return 2
    with open(args[-1], encoding="utf-8") as fh:
        text = fh.read()
    toks, pairs = adjacent_loops(text)
    for kind, lo, hi in pairs:
        if PLANTED in toks[lo:hi + 1]:
            print(f"fake_opt: LoopFusion.cpp:1337: fusePair: Assertion `!planted({kind})' failed.",
                  file=sys.stderr)
            return 1
    if pairs:
        print(f"fused: {len(pairs)}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
