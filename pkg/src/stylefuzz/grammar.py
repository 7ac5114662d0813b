"""Grammar loading, tokenizing, parsing and unparsing.

Grammars are written in a small EBNF-like text format (see ``docs/formats.md``)::

    start translationUnit;
    skip /[ \\t\\r\\n]+/;
    token ID /[A-Za-z_][A-Za-z0-9_]*/ priority 1;
    translationUnit : item* ;
    item : ID '=' ID ';' | ';' ;

Programs are parsed with an Earley recognizer, so any context-free grammar
works, including left-recursive and ambiguous ones. Ambiguity is resolved
top-down: every node takes the lowest alternative that can derive its span
and, inside an alternative, earlier children take the longest span.
"""

from __future__ import annotations

import functools
import re
import sys
from dataclasses import dataclass, field
from typing import Iterator

LITERAL_PRIORITY = 1_000_000

_NO_SPACE_BEFORE = frozenset({";", ")", ",", "]"})
_NO_SPACE_AFTER = frozenset({"(", "["})


class GrammarError(Exception):
    """Malformed grammar source."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class TokenizeError(Exception):
    def __init__(self, offset: int, source: str):
        self.offset = offset
        snippet = source[offset:offset + 10]
        super().__init__(f"unrecognized character at offset {offset}: {snippet!r}")


class ParseError(Exception):
    """Raised when a program is not in the grammar's language.

    ``token_index`` is the first token that could not be consumed
    (``len(tokens)`` for premature end of input).
    """

    def __init__(self, token_index: int, expected: list[str], found: str | None):
        self.token_index = token_index
        self.expected = expected
        self.found = found
        got = "end of input" if found is None else repr(found)
        exp = ", ".join(expected[:12]) or "nothing"
        super().__init__(f"parse error at token {token_index}: got {got}, expected one of {exp}")


@dataclass(frozen=True)
class Symbol:
    """One element of an alternative: a rule, a token class or a quoted literal."""

    name: str
    literal: bool = False
    op: str = ""  # '', '*', '+' or '?'

    @property
    def kind(self) -> str:
        return literal_kind(self.name) if self.literal else self.name

    @property
    def repeated(self) -> bool:
        return self.op in ("*", "+")

    def __str__(self) -> str:
        base = repr(self.name) if self.literal else self.name
        return base + self.op


def literal_kind(text: str) -> str:
    return "'" + text + "'"


@dataclass(frozen=True)
class TokenClass:
    name: str
    pattern: str
    priority: int
    regex: re.Pattern = field(repr=False, compare=False)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    index: int
    start: int
    end: int
    src: str | None = field(default=None, repr=False, compare=False)
    final: bool = field(default=False, repr=False, compare=False)

    def renamed(self, text: str) -> "Token":
        """Same position and source, different text (used when rebinding names)."""
        return Token(self.kind, text, self.index, self.start, self.end, self.src, self.final)


class ParseNode:
    """A concrete parse-tree node.

    ``slot`` is the index of the symbol in the parent's alternative that produced
    this node and ``rep`` tells whether that symbol was repeated (``*``/``+``),
    i.e. whether siblings of the same kind may be inserted next to it.
    ``token_span`` is inclusive; an empty node at token position ``p`` has span
    ``(p, p - 1)``.
    """

    __slots__ = ("kind", "children", "token", "alt_index", "slot", "rep",
                 "token_span", "start", "end", "parent", "source", "tokens")

    def __init__(self, kind: str, children=(), token: Token | None = None, alt_index: int = 0,
                 slot: int = 0, rep: bool = False, token_span=None, start=None, end=None):
        self.kind = kind
        self.children = tuple(children)
        self.token = token
        self.alt_index = alt_index
        self.slot = slot
        self.rep = rep
        self.parent = None
        self.source = None
        self.tokens = None
        if token is not None:
            self.token_span = (token.index, token.index)
            self.start, self.end = token.start, token.end
        elif self.children:
            self.token_span = (self.children[0].token_span[0], self.children[-1].token_span[1])
            self.start, self.end = self.children[0].start, self.children[-1].end
        else:
            self.token_span = token_span if token_span is not None else (0, -1)
            self.start = start if start is not None else 0
            self.end = end if end is not None else self.start
        for child in self.children:
            child.parent = self

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def n_tokens(self) -> int:
        return self.token_span[1] - self.token_span[0] + 1

    def preorder(self) -> Iterator["ParseNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list["ParseNode"]:
        return [n for n in self.preorder() if n.token is not None]

    def ancestors(self) -> Iterator["ParseNode"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def is_descendant_of(self, other: "ParseNode") -> bool:
        """True if ``other`` is this node or one of its ancestors."""
        node = self
        while node is not None:
            if node is other:
                return True
            node = node.parent
        return False

    def text(self) -> str:
        return unparse(self)

    def shape(self):
        """Kinds, alternatives and child counts, as a nested tuple."""
        if self.token is not None:
            return self.kind
        return (self.kind, self.alt_index, tuple(c.shape() for c in self.children))

    def to_dict(self) -> dict:
        if self.token is not None:
            return {"kind": self.kind, "text": self.token.text, "span": list(self.token_span)}
        return {"kind": self.kind, "alt": self.alt_index, "span": list(self.token_span),
                "children": [c.to_dict() for c in self.children]}

    def __repr__(self) -> str:
        if self.token is not None:
            return f"ParseNode({self.kind}, {self.token.text!r})"
        return f"ParseNode({self.kind}, span={self.token_span}, alt={self.alt_index})"


# --------------------------------------------------------------------------
# Grammar file format


_GRAMMAR_LEX = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<regex>/(?:\\.|[^/\\\n])+/)
  | (?P<string>'(?:\\.|[^'\\\n])*'|"(?:\\.|[^"\\\n])*")
  | (?P<number>-?[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[:|;*+?])
""", re.VERBOSE)


def _lex_grammar(text: str):
    pos, line, line_start = 0, 1, 0
    out = []
    while pos < len(text):
        m = _GRAMMAR_LEX.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise GrammarError(f"syntax error: unexpected {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            out.append((kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rindex("\n") + 1
        pos = m.end()
    out.append(("eof", "", line, pos - line_start + 1))
    return out


def _unquote(s: str) -> str:
    body = s[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def _compile_pattern(src: str, line: int, col: int) -> re.Pattern:
    body = src[1:-1].replace("\\/", "/")
    try:
        return re.compile(body)
    except re.error as exc:
        raise GrammarError(f"bad pattern {src}: {exc}", line, col) from None


@dataclass(eq=False)
class Grammar:
    rules: dict[str, list[tuple[Symbol, ...]]]
    token_classes: dict[str, TokenClass]
    start_rule: str
    skip: list[re.Pattern] = field(default_factory=list)

    def __post_init__(self):
        self.literals = sorted({s.name for alts in self.rules.values() for alt in alts
                                for s in alt if s.literal}, key=lambda t: (-len(t), t))
        self._by_first: dict[str, list[str]] = {}
        for lit in self.literals:
            self._by_first.setdefault(lit[0], []).append(lit)
        self._classes = sorted(self.token_classes.values(), key=lambda c: -c.priority)
        self._tables = _EarleyTables(self)
        self.unit_closure = self._unit_closure()

    # Derivations through single-symbol alternatives: kind -> kinds it can become.
    def _unit_closure(self) -> dict[str, frozenset[str]]:
        step: dict[str, set[str]] = {}
        for name, alts in self.rules.items():
            step[name] = {alt[0].kind for alt in alts if len(alt) == 1 and not alt[0].op}
        closure = {}
        for name in self.rules:
            seen = {name}
            todo = [name]
            while todo:
                for nxt in step.get(todo.pop(), ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        todo.append(nxt)
            closure[name] = frozenset(seen)
        return closure

    def derives(self, symbol_kind: str, kind: str) -> bool:
        """Can ``symbol_kind`` derive a node of ``kind`` through unit alternatives?"""
        if symbol_kind == kind:
            return True
        return kind in self.unit_closure.get(symbol_kind, ())

    def symbol_at(self, node: ParseNode) -> Symbol | None:
        """The symbol of the parent's alternative that produced ``node``."""
        parent = node.parent
        if parent is None:
            return None
        return self.rules[parent.kind][parent.alt_index][node.slot]

    def parse(self, source: str) -> ParseNode:
        return _cached_parse(self, source)


def load_grammar(text: str) -> Grammar:
    toks = _lex_grammar(text)
    pos = 0

    def peek():
        return toks[pos]

    def take(kind=None, value=None):
        nonlocal pos
        tok = toks[pos]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of file"
            raise GrammarError(f"syntax error: expected {want}, got {got!r}", tok[2], tok[3])
        pos += 1
        return tok

    rules: dict[str, list[tuple[Symbol, ...]]] = {}
    refs: list[tuple[str, int, int]] = []
    classes: dict[str, TokenClass] = {}
    skips: list[re.Pattern] = []
    start = None
    first_rule = None

    while peek()[0] != "eof":
        kind, value, line, col = peek()
        if kind != "name":
            raise GrammarError(f"syntax error: unexpected {value!r}", line, col)
        nxt = toks[pos + 1]
        if value == "start" and nxt[0] == "name":
            take()
            start = take("name")[1]
            take("punct", ";")
        elif value == "skip" and nxt[0] == "regex":
            take()
            rx = take("regex")
            skips.append(_compile_pattern(rx[1], rx[2], rx[3]))
            take("punct", ";")
        elif value == "token" and nxt[0] == "name":
            take()
            name_tok = take("name")
            rx = take("regex")
            priority = 0
            if peek()[0] == "name" and peek()[1] == "priority":
                take()
                priority = int(take("number")[1])
            take("punct", ";")
            if name_tok[1] in classes:
                raise GrammarError(f"duplicate token {name_tok[1]}", name_tok[2], name_tok[3])
            classes[name_tok[1]] = TokenClass(name_tok[1], rx[1][1:-1], priority,
                                              _compile_pattern(rx[1], rx[2], rx[3]))
        else:
            take()
            take("punct", ":")
            if value in rules:
                raise GrammarError(f"duplicate rule {value}", line, col)
            alts: list[tuple[Symbol, ...]] = []
            current: list[Symbol] = []
            while True:
                k, v, ln, cl = peek()
                if k == "punct" and v == "|":
                    take()
                    alts.append(tuple(current))
                    current = []
                elif k == "punct" and v == ";":
                    take()
                    alts.append(tuple(current))
                    break
                elif k in ("name", "string"):
                    take()
                    op = ""
                    if peek()[0] == "punct" and peek()[1] in "*+?":
                        op = take()[1]
                    if k == "string":
                        lit = _unquote(v)
                        if not lit:
                            raise GrammarError("empty literal", ln, cl)
                        current.append(Symbol(lit, True, op))
                    else:
                        current.append(Symbol(v, False, op))
                        refs.append((v, ln, cl))
                else:
                    raise GrammarError(f"syntax error: unexpected {v or 'end of file'!r} in rule {value}", ln, cl)
            rules[value] = alts
            first_rule = first_rule or value

    for name in classes:
        if name in rules:
            raise GrammarError(f"{name} is both a token and a rule")
    for name, line, col in refs:
        if name not in rules and name not in classes:
            raise GrammarError(f"undefined rule {name}", line, col)
    if start is None:
        start = first_rule
    if start is None:
        raise GrammarError("grammar has no rules")
    if start not in rules:
        raise GrammarError(f"undefined rule {start} (start rule)")
    return Grammar(rules, classes, start, skips)


def load_grammar_file(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return load_grammar(fh.read())


# --------------------------------------------------------------------------
# Lexing


def tokenize(grammar: Grammar, source: str) -> list[Token]:
    """Longest match wins; equal lengths go to the higher priority (literals first)."""
    tokens: list[Token] = []
    pos, n = 0, len(source)
    by_first = grammar._by_first
    classes = grammar._classes
    skips = grammar.skip
    while pos < n:
        best_len, best_prio, best_kind = 0, None, None
        for lit in by_first.get(source[pos], ()):
            if source.startswith(lit, pos):
                best_len, best_prio, best_kind = len(lit), LITERAL_PRIORITY, literal_kind(lit)
                break
        for tc in classes:
            m = tc.regex.match(source, pos)
            if m is None:
                continue
            length = m.end() - pos
            if length > best_len or (length == best_len and length and tc.priority > best_prio):
                best_len, best_prio, best_kind = length, tc.priority, tc.name
        skip_len = 0
        for rx in skips:
            m = rx.match(source, pos)
            if m is not None and m.end() - pos > skip_len:
                skip_len = m.end() - pos
        if skip_len > best_len:
            pos += skip_len
            continue
        if best_len == 0:
            raise TokenizeError(pos, source)
        tokens.append(Token(best_kind, source[pos:pos + best_len], len(tokens), pos,
                            pos + best_len, source))
        pos += best_len
    if tokens:
        last = tokens[-1]
        tokens[-1] = Token(last.kind, last.text, last.index, last.start, last.end, source, True)
    return tokens


# --------------------------------------------------------------------------
# Earley parsing


class _EarleyTables:
    """BNF productions compiled from the grammar; ``*``/``+``/``?`` become hidden rules."""

    def __init__(self, grammar: Grammar):
        self.nt_names: list[str] = []
        self.nt_id: dict[str, int] = {}
        self.lhs: list[int] = []
        self.rhs: list[tuple] = []
        self.meta: list[tuple] = []  # (user rule name or None, alt index, hidden op)
        for name in grammar.rules:
            self._nt(name)
        self.user = set(range(len(self.nt_names)))
        self.aug = self._nt("<start>")
        self._add(self.aug, (self.nt_id[grammar.start_rule],), (None, 0, "aug"))
        hidden: dict[tuple[str, str], int] = {}
        for name, alts in grammar.rules.items():
            for ai, alt in enumerate(alts):
                rhs = []
                for sym in alt:
                    base = self.nt_id[sym.name] if sym.name in self.nt_id and not sym.literal else sym.kind
                    if sym.op:
                        key = (sym.kind, sym.op)
                        if key not in hidden:
                            hid = self._nt(f"<{sym.kind}{sym.op}>")
                            hidden[key] = hid
                            if sym.op == "*":
                                self._add(hid, (hid, base), (None, 0, "*"))
                                self._add(hid, (), (None, 1, "*"))
                            elif sym.op == "+":
                                self._add(hid, (hid, base), (None, 0, "+"))
                                self._add(hid, (base,), (None, 1, "+"))
                            else:
                                self._add(hid, (base,), (None, 0, "?"))
                                self._add(hid, (), (None, 1, "?"))
                        rhs.append(hidden[key])
                    else:
                        rhs.append(base)
                self._add(self.nt_id[name], tuple(rhs), (name, ai, ""))
        self.by_lhs: list[list[int]] = [[] for _ in self.nt_names]
        for pid, lhs in enumerate(self.lhs):
            self.by_lhs[lhs].append(pid)
        self.nullable = self._nullable()

    def _nt(self, name: str) -> int:
        if name not in self.nt_id:
            self.nt_id[name] = len(self.nt_names)
            self.nt_names.append(name)
        return self.nt_id[name]

    def _add(self, lhs: int, rhs: tuple, meta: tuple):
        self.lhs.append(lhs)
        self.rhs.append(rhs)
        self.meta.append(meta)

    def _nullable(self) -> frozenset[int]:
        nullable: set[int] = set()
        changed = True
        while changed:
            changed = False
            for lhs, rhs in zip(self.lhs, self.rhs):
                if lhs not in nullable and all(type(s) is int and s in nullable for s in rhs):
                    nullable.add(lhs)
                    changed = True
        return frozenset(nullable)


def _recognize(tables: _EarleyTables, kinds: list[str]):
    n = len(kinds)
    rhs_of, lhs_of, by_lhs, nullable = tables.rhs, tables.lhs, tables.by_lhs, tables.nullable
    sets: list[list] = [[] for _ in range(n + 1)]
    seens: list[set] = [set() for _ in range(n + 1)]
    completed: list[dict] = [{} for _ in range(n + 1)]
    waiting: list[dict] = [{} for _ in range(n + 1)]

    start = (by_lhs[tables.aug][0], 0, 0)
    sets[0].append(start)
    seens[0].add(start)
    for i in range(n + 1):
        items, seen = sets[i], seens[i]
        wait_i = waiting[i]
        predicted = set()
        nxt_kind = kinds[i] if i < n else None
        nxt_items, nxt_seen = (sets[i + 1], seens[i + 1]) if i < n else (None, None)
        j = 0
        while j < len(items):
            item = items[j]
            j += 1
            pid, dot, origin = item
            rhs = rhs_of[pid]
            if dot == len(rhs):
                lhs = lhs_of[pid]
                ends = completed[origin].get(lhs)
                if ends is None:
                    completed[origin][lhs] = {i}
                elif i in ends:
                    continue
                else:
                    ends.add(i)
                for p2, d2, o2 in waiting[origin].get(lhs, ()):
                    new = (p2, d2 + 1, o2)
                    if new not in seen:
                        seen.add(new)
                        items.append(new)
                continue
            sym = rhs[dot]
            if type(sym) is int:
                lst = wait_i.get(sym)
                if lst is None:
                    wait_i[sym] = [item]
                else:
                    lst.append(item)
                if sym not in predicted:
                    predicted.add(sym)
                    for p in by_lhs[sym]:
                        new = (p, 0, i)
                        if new not in seen:
                            seen.add(new)
                            items.append(new)
                if sym in nullable:
                    new = (pid, dot + 1, origin)
                    if new not in seen:
                        seen.add(new)
                        items.append(new)
            elif sym == nxt_kind:
                new = (pid, dot + 1, origin)
                if new not in nxt_seen:
                    nxt_seen.add(new)
                    nxt_items.append(new)
    return sets, completed


class _TreeBuilder:
    def __init__(self, tables: _EarleyTables, grammar: Grammar, tokens: list[Token], completed):
        self.t = tables
        self.g = grammar
        self.tokens = tokens
        self.kinds = [tok.kind for tok in tokens]
        self.completed = completed
        self.reach_memo: dict = {}
        self.active: set = set()

    def reach(self, pid: int, k: int, i: int) -> frozenset:
        key = (pid, k, i)
        got = self.reach_memo.get(key)
        if got is not None:
            return got
        rhs = self.t.rhs[pid]
        if k == len(rhs):
            res = frozenset((i,))
        else:
            sym = rhs[k]
            if type(sym) is int:
                acc = set()
                for e in self.completed[i].get(sym, ()):
                    acc |= self.reach(pid, k + 1, e)
                res = frozenset(acc)
            elif i < len(self.kinds) and self.kinds[i] == sym:
                res = self.reach(pid, k + 1, i + 1)
            else:
                res = frozenset()
        self.reach_memo[key] = res
        return res

    def seq(self, pid: int, k: int, i: int, j: int):
        """Children for rhs[k:] spanning tokens[i:j] as a list of (rhs position, pieces)."""
        rhs = self.t.rhs[pid]
        if k == len(rhs):
            return [] if i == j else None
        sym = rhs[k]
        if type(sym) is not int:
            if i < j and self.kinds[i] == sym and j in self.reach(pid, k + 1, i + 1):
                rest = self.seq(pid, k + 1, i + 1, j)
                if rest is not None:
                    leaf = ParseNode(sym, token=self.tokens[i])
                    return [(k, [leaf])] + rest
            return None
        for e in sorted(self.completed[i].get(sym, ()), reverse=True):
            if e > j or j not in self.reach(pid, k + 1, e):
                continue
            pieces = self.build(sym, i, e)
            if pieces is None:
                continue
            rest = self.seq(pid, k + 1, e, j)
            if rest is not None:
                return [(k, pieces)] + rest
        return None

    def build(self, nt: int, i: int, j: int):
        """A list of nodes: one for user rules, a flattened run for hidden rules."""
        key = (nt, i, j)
        if key in self.active:
            return None
        self.active.add(key)
        try:
            for pid in self.t.by_lhs[nt]:
                if j not in self.reach(pid, 0, i):
                    continue
                parts = self.seq(pid, 0, i, j)
                if parts is None:
                    continue
                name, alt_index, op = self.t.meta[pid]
                if name is None:
                    flat = []
                    for _, pieces in parts:
                        flat.extend(pieces)
                    return flat
                alt = self.g.rules[name][alt_index]
                children = []
                for k, pieces in parts:
                    for piece in pieces:
                        piece.slot = k
                        piece.rep = alt[k].repeated
                        children.append(piece)
                start = self.tokens[i].start if i < len(self.tokens) else (
                    self.tokens[-1].end if self.tokens else 0)
                return [ParseNode(name, children, alt_index=alt_index,
                                  token_span=(i, i - 1), start=start, end=start)]
            return None
        finally:
            self.active.discard(key)


def parse(grammar: Grammar, source: str) -> ParseNode:
    """Parse ``source``; the result is rooted at the grammar's start rule."""
    return _cached_parse(grammar, source)


@functools.lru_cache(maxsize=512)
def _cached_parse(grammar: Grammar, source: str) -> ParseNode:
    tokens = tokenize(grammar, source)
    return parse_tokens(grammar, tokens, source)


def parse_tokens(grammar: Grammar, tokens: list[Token], source: str = "") -> ParseNode:
    tables = grammar._tables
    kinds = [t.kind for t in tokens]
    sets, completed = _recognize(tables, kinds)
    n = len(tokens)
    start_id = tables.nt_id[grammar.start_rule]
    if n not in completed[0].get(start_id, ()):
        furthest = max(i for i in range(n + 1) if sets[i])
        expected = sorted({tables.rhs[p][d] for p, d, _ in sets[furthest]
                           if d < len(tables.rhs[p]) and type(tables.rhs[p][d]) is not int})
        found = tokens[furthest].text if furthest < n else None
        raise ParseError(furthest, expected, found)
    limit = sys.getrecursionlimit()
    if limit < 20000:
        sys.setrecursionlimit(20000)
    builder = _TreeBuilder(tables, grammar, tokens, completed)
    root = builder.build(start_id, 0, n)[0]
    root.source = source
    root.tokens = tokens
    return root


# --------------------------------------------------------------------------
# Unparsing


def _separator(prev: str, nxt: str) -> str:
    if nxt in _NO_SPACE_BEFORE or prev in _NO_SPACE_AFTER:
        return ""
    return " "


def unparse(tree: ParseNode, policy: str = "preserve") -> str:
    """Serialize a parse tree.

    ``preserve`` keeps the original text between tokens that were adjacent in
    the same source; everything else is joined with the spacing policy
    (single spaces, none before ``;`` ``)`` ``,`` ``]`` and none after ``(`` ``[``).
    ``spaced`` applies the spacing policy everywhere.
    """
    if policy not in ("preserve", "spaced"):
        raise ValueError(f"unknown spacing policy {policy!r}")
    leaves = tree.leaves()
    if not leaves:
        return tree.source if (policy == "preserve" and tree.source) else ""
    keep = policy == "preserve"
    whole = keep and tree.parent is None
    out = []
    first = leaves[0].token
    if whole and first.src is not None and first.index == 0:
        out.append(first.src[:first.start])
    prev = None
    for leaf in leaves:
        tok = leaf.token
        if prev is not None:
            if keep and tok.src is not None and tok.src is prev.src and tok.index == prev.index + 1:
                out.append(tok.src[prev.end:tok.start])
            else:
                out.append(_separator(prev.text, tok.text))
        out.append(tok.text)
        prev = tok
    if whole and prev.src is not None and prev.final:
        out.append(prev.src[prev.end:])
    return "".join(out)


def shape(tree: ParseNode):
    return tree.shape()
