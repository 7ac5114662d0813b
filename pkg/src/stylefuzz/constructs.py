"""Construct trees, declaration-use chains and the containment test.

An annotation file maps grammar rules to construct types. Translating a parse
tree keeps only the annotated nodes; ancestry comes from the parse tree and a
synthetic ``PROGRAM_`` root sits on top.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .grammar import Grammar, ParseNode
from .predicates import PREDICATES

PROGRAM = "PROGRAM_"
ROLES = ("use", "def", "type")


class AnnotationError(Exception):
    pass


class ContractError(Exception):
    """A caller broke an operation's precondition."""


@dataclass(frozen=True)
class ConstructDef:
    name: str
    matcher: str  # 'rules', 'union' or 'pred'
    rules: frozenset = frozenset()
    members: tuple = ()
    predicate: str | None = None
    role: str = "none"

    @property
    def specificity(self) -> int:
        return {"pred": 2, "rules": 1, "union": 0}[self.matcher]


@dataclass(frozen=True)
class AnnotationSet:
    language: str
    defs: tuple
    scopes: tuple = (PROGRAM,)
    typecompat: frozenset = frozenset()
    construct_type_map: dict = field(default_factory=dict, compare=False)

    def get(self, name: str) -> ConstructDef | None:
        for d in self.defs:
            if d.name == name:
                return d
        return None

    def role(self, role: str) -> str | None:
        for d in self.defs:
            if d.role == role:
                return d.name
        return None

    def expand(self, name: str) -> frozenset:
        """``name`` plus every construct reachable through union membership."""
        out = {name}
        todo = [name]
        while todo:
            d = self.get(todo.pop())
            if d is not None and d.matcher == "union":
                for m in d.members:
                    if m not in out:
                        out.add(m)
                        todo.append(m)
        return frozenset(out)

    def expand_all(self, names: Iterable[str]) -> frozenset:
        out: set = set()
        for n in names:
            out |= self.expand(n)
        return frozenset(out)

    def compatible(self, orig: str, cand: str) -> bool:
        """Can a use typed ``orig`` be bound to a def typed ``cand``?"""
        return orig == cand or (orig, cand) in self.typecompat


_ANN_LEX = re.compile(r"""
    (?P<ws>\s+) | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<name>[A-Za-z_](?:[A-Za-z0-9_\[\]]|-(?!>))*)
  | (?P<punct>[=;,()|])
""", re.VERBOSE)


def _lex_ann(text: str):
    pos, line, col0 = 0, 1, 0
    out = []
    while pos < len(text):
        m = _ANN_LEX.match(text, pos)
        if m is None:
            raise AnnotationError(f"syntax error at line {line}, column {pos - col0 + 1}: {text[pos]!r}")
        if m.lastgroup not in ("ws", "comment"):
            out.append((m.lastgroup, m.group(), line))
        nl = m.group().count("\n")
        if nl:
            line += nl
            col0 = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    out.append(("eof", "", line))
    return out


def load_annotations(text: str, grammar: Grammar) -> AnnotationSet:
    toks = _lex_ann(text)
    pos = 0

    def take(value=None, kind=None):
        nonlocal pos
        k, v, line = toks[pos]
        if (value is not None and v != value) or (kind is not None and k != kind):
            raise AnnotationError(f"syntax error at line {line}: expected {value or kind}, got {v!r}")
        pos += 1
        return v

    def name_list(stop):
        names = [take(kind="name")]
        while toks[pos][1] == ",":
            take(",")
            names.append(take(kind="name"))
        take(stop)
        return names

    language = ""
    defs: list[ConstructDef] = []
    roles: dict[str, str] = {}
    scopes: list[str] = []
    compat: set = set()
    while toks[pos][0] != "eof":
        word = take(kind="name")
        line = toks[pos - 1][2]
        if word == "language":
            language = take(kind="name")
            take(";")
        elif word == "construct":
            name = take(kind="name")
            take("=")
            form = take(kind="name")
            take("(")
            if any(d.name == name for d in defs) or name == PROGRAM:
                raise AnnotationError(f"duplicate construct {name} at line {line}")
            if form == "rules":
                rules = name_list(")")
                for r in rules:
                    if r not in grammar.rules:
                        raise AnnotationError(f"unknown rule {r} in construct {name} at line {line}")
                defs.append(ConstructDef(name, "rules", rules=frozenset(rules)))
            elif form == "union":
                members = name_list(")")
                for m in members:
                    if not any(d.name == m for d in defs):
                        raise AnnotationError(f"undefined union member {m} in construct {name} at line {line}")
                defs.append(ConstructDef(name, "union", members=tuple(members)))
            elif form == "pred":
                pred = take(kind="name")
                if pred not in PREDICATES:
                    raise AnnotationError(f"unknown predicate {pred} at line {line}")
                take("on")
                rules = name_list(")")
                for r in rules:
                    if r not in grammar.rules:
                        raise AnnotationError(f"unknown rule {r} in construct {name} at line {line}")
                defs.append(ConstructDef(name, "pred", rules=frozenset(rules), predicate=pred))
            else:
                raise AnnotationError(f"unknown matcher {form!r} at line {line}")
            take(";")
        elif word == "role":
            name = take(kind="name")
            role = take(kind="name")
            take(";")
            if role not in ROLES:
                raise AnnotationError(f"unknown role {role!r} at line {line}")
            if role in roles:
                raise AnnotationError(f"duplicate role {role} (already on {roles[role]}) at line {line}")
            idx = next((i for i, d in enumerate(defs) if d.name == name), None)
            if idx is None:
                raise AnnotationError(f"role on undefined construct {name} at line {line}")
            roles[role] = name
            d = defs[idx]
            defs[idx] = ConstructDef(d.name, d.matcher, d.rules, d.members, d.predicate, role)
        elif word == "scopes":
            scopes.extend(name_list(";"))
        elif word == "typecompat":
            while True:
                a = take(kind="name")
                take("->")
                b = take(kind="name")
                compat.add((a, b))
                if toks[pos][1] == ",":
                    take(",")
                    continue
                take(";")
                break
        else:
            raise AnnotationError(f"unknown statement {word!r} at line {line}")

    known = {d.name for d in defs} | {PROGRAM}
    for s in scopes:
        if s not in known:
            raise AnnotationError(f"undefined scope construct {s}")
    if PROGRAM not in scopes:
        scopes.insert(0, PROGRAM)
    type_map: dict[str, list[str]] = {}
    for d in defs:
        for r in d.rules:
            type_map.setdefault(r, []).append(d.name)
    return AnnotationSet(language, tuple(defs), tuple(scopes), frozenset(compat),
                         {k: tuple(v) for k, v in type_map.items()})


def load_annotations_file(path, grammar: Grammar) -> AnnotationSet:
    with open(path, encoding="utf-8") as fh:
        return load_annotations(fh.read(), grammar)


class ConstructNode:
    __slots__ = ("ctype", "parse_ref", "children", "parent", "depth", "order", "tree")

    def __init__(self, ctype: str, parse_ref: ParseNode, parent: "ConstructNode | None"):
        self.ctype = ctype
        self.parse_ref = parse_ref
        self.children: list[ConstructNode] = []
        self.parent = parent
        self.depth = 0 if parent is None else parent.depth + 1
        self.order = 0
        self.tree = None

    @property
    def token_span(self) -> tuple:
        return self.parse_ref.token_span

    def preorder(self) -> Iterator["ConstructNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def ancestors(self) -> Iterator["ConstructNode"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def is_descendant_of(self, other: "ConstructNode") -> bool:
        node = self
        while node is not None:
            if node is other:
                return True
            node = node.parent
        return False

    def to_dict(self) -> dict:
        return {"ctype": self.ctype, "rule": self.parse_ref.kind, "span": list(self.token_span),
                "children": [c.to_dict() for c in self.children]}

    def __repr__(self) -> str:
        return f"ConstructNode({self.ctype}, span={self.token_span})"


class ConstructTree:
    """Root handle: the construct root plus lookups shared by later stages."""

    def __init__(self, root: ConstructNode, tree: ParseNode, ann: AnnotationSet):
        self.root = root
        self.tree = tree
        self.ann = ann
        self.nodes = list(root.preorder())
        for i, n in enumerate(self.nodes):
            n.order = i
            n.tree = self
        self.by_parse = {id(n.parse_ref): n for n in reversed(self.nodes)}

    def of(self, parse_node: ParseNode) -> ConstructNode | None:
        return self.by_parse.get(id(parse_node))

    def enclosing(self, parse_node: ParseNode) -> ConstructNode:
        """Lowest construct whose parse node is ``parse_node`` or one of its ancestors."""
        node = parse_node
        while node is not None:
            c = self.by_parse.get(id(node))
            if c is not None:
                return c
            node = node.parent
        return self.root


def _unit_chain_has(node: ParseNode, kinds: frozenset) -> bool:
    while len(node.children) == 1:
        node = node.children[0]
        if node.kind in kinds:
            return True
    return False


def classify(node: ParseNode, ann: AnnotationSet) -> str | None:
    """T(n): the most specific matching construct, ties broken by annotation order."""
    best = None
    matched: set = set()
    for i, d in enumerate(ann.defs):
        if node.kind not in d.rules:
            continue
        if d.matcher == "pred":
            if _unit_chain_has(node, d.rules) or not PREDICATES[d.predicate](node):
                continue
        matched.add(d.name)
        key = (-d.specificity, i)
        if best is None or key < best[0]:
            best = (key, d.name)
    if matched:
        for i, d in enumerate(ann.defs):
            if d.matcher == "union" and any(m in matched for m in d.members):
                matched.add(d.name)
                key = (-d.specificity, i)
                if key < best[0]:
                    best = (key, d.name)
    return best[1] if best else None


def translate(tree: ParseNode, ann: AnnotationSet) -> ConstructNode:
    root = ConstructNode(PROGRAM, tree, None)
    relevant = frozenset(ann.construct_type_map)
    stack = [(tree, root)]
    while stack:
        node, parent = stack.pop()
        ctype = classify(node, ann) if node.kind in relevant else None
        if ctype is not None:
            c = ConstructNode(ctype, node, parent)
            parent.children.append(c)
            parent = c
        for child in reversed(node.children):
            if child.token is None:
                stack.append((child, parent))
    ConstructTree(root, tree, ann)
    return root


# --------------------------------------------------------------------------
# Declaration-use chains


def node_name(node: ParseNode) -> str:
    """Text of the first non-literal leaf: the identifier of a use or def."""
    for leaf in node.leaves():
        if not leaf.kind.startswith("'"):
            return leaf.token.text
    leaves = node.leaves()
    return leaves[0].token.text if leaves else ""


@dataclass(eq=False)
class Def:
    name: str
    type_label: str
    node: ConstructNode
    scope: ConstructNode

    @property
    def position(self) -> int:
        return self.node.token_span[0]


@dataclass(eq=False)
class Use:
    name: str
    node: ConstructNode
    resolved: Def | None = None


@dataclass(eq=False)
class DeclUseChains:
    defs: list
    uses: list
    scopes: dict
    ann: AnnotationSet = None
    by_node: dict = field(default_factory=dict)

    def use_of(self, node: ConstructNode) -> Use | None:
        return self.by_node.get(id(node))

    def def_of(self, node: ConstructNode) -> Def | None:
        d = self.by_node.get(id(node))
        return d if isinstance(d, Def) else None

    def uses_in(self, node: ConstructNode) -> list:
        lo, hi = node.token_span
        return [u for u in self.uses
                if lo <= u.node.token_span[0] <= hi and u.node.is_descendant_of(node)]

    def defs_in(self, node: ConstructNode) -> list:
        return [d for d in self.defs if d.node.is_descendant_of(node)]

    def unresolved(self) -> list:
        return [u for u in self.uses if u.resolved is None]

    def visible_at(self, scope_node: ConstructNode, position: int) -> list:
        """Defs visible at token ``position`` inside ``scope_node``, innermost first, shadowing applied."""
        seen: dict[str, Def] = {}
        node = scope_node
        while node is not None:
            if node.ctype in self._scope_types:
                for d in reversed(self.scopes.get(id(node), ())):
                    if d.position < position and d.name not in seen:
                        seen[d.name] = d
            node = node.parent
        return list(seen.values())

    @property
    def _scope_types(self) -> frozenset:
        return self.ann.expand_all(self.ann.scopes)

    def to_dict(self) -> dict:
        def span(n):
            return list(n.token_span)
        return {
            "defs": [{"name": d.name, "type": d.type_label, "span": span(d.node),
                      "scope": d.scope.ctype, "scope_span": span(d.scope)} for d in self.defs],
            "uses": [{"name": u.name, "span": span(u.node),
                      "def_span": span(u.resolved.node) if u.resolved else None} for u in self.uses],
        }


def scope_of(node: ConstructNode, scope_types: frozenset) -> ConstructNode:
    for a in node.ancestors():
        if a.ctype in scope_types:
            return a
    return node if node.parent is None else node.tree.root


def type_label(def_node: ConstructNode, ann: AnnotationSet) -> str:
    """First type construct in preorder under the def's lowest ancestor that has one."""
    tname = ann.role("type")
    pnode = def_node.parse_ref
    suffix = "[]" if any(l.token.text == "[" for l in pnode.leaves()) else ""
    if tname is None:
        return "?"
    trules = ann.get(tname).rules
    anc = pnode.parent
    while anc is not None:
        for n in anc.preorder():
            if n.kind in trules:
                return " ".join(l.token.text for l in n.leaves()) + suffix
        anc = anc.parent
    return "?"


def resolve_decl_use(ct: ConstructNode, ann: AnnotationSet) -> DeclUseChains:
    use_t, def_t = ann.role("use"), ann.role("def")
    scope_types = ann.expand_all(ann.scopes)
    defs, uses = [], []
    scopes: dict = {}
    chains = DeclUseChains(defs, uses, scopes, ann)
    nodes = list(ct.preorder())
    for n in nodes:
        if def_t is not None and n.ctype == def_t:
            scope = scope_of(n, scope_types)
            d = Def(node_name(n.parse_ref), type_label(n, ann), n, scope)
            defs.append(d)
            scopes.setdefault(id(scope), []).append(d)
            chains.by_node[id(n)] = d
    for n in nodes:
        if use_t is not None and n.ctype == use_t:
            u = Use(node_name(n.parse_ref), n)
            pos = n.token_span[0]
            for d in _visible(chains, n, pos, scope_types):
                if d.name == u.name:
                    u.resolved = d
                    break
            uses.append(u)
            chains.by_node[id(n)] = u
    return chains


def _visible(chains: DeclUseChains, node: ConstructNode, pos: int, scope_types) -> list:
    out = []
    a = node.parent
    while a is not None:
        if a.ctype in scope_types:
            out.extend(sorted((d for d in chains.scopes.get(id(a), ()) if d.position < pos),
                              key=lambda d: -d.position))
        a = a.parent
    return out


def contains(ctx: ConstructNode, nodes: Iterable[ConstructNode], chains: DeclUseChains) -> bool:
    nodes = list(nodes)
    for n in nodes:
        if not n.is_descendant_of(ctx):
            raise ContractError(f"{n!r} is not inside {ctx!r}")
    for n in nodes:
        for u in chains.uses_in(n):
            d = u.resolved
            if d is None or not d.node.is_descendant_of(ctx):
                return False
    return True
