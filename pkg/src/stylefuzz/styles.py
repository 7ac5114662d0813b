"""Composition styles and the scanner that finds them in construct trees.

Styles name abstract categories (``Loop``, ``FuncCall`` ...). Each category is
bound to a conventional construct name in the annotation file, e.g. ``Loop``
is ``LOOPS_``; unions are expanded, so a ``FOR_STMT_`` counts as a ``Loop``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .constructs import AnnotationSet, ConstructNode, DeclUseChains, contains

CATEGORY = {
    "Loop": "LOOPS_",
    "FuncCall": "FUNC_CALL_",
    "Arithmetic": "ARITH_EXPR_",
    "Logical": "LOGICAL_EXPR_",
    "If-Else": "IF_ELSE_",
    "MemRef": "MEMREF_",
    "Vector": "VECTOR_EXPR_",
    "Func": "FUNC_",
    "Program": "PROGRAM_",
}

MUTATORS = ("Replicate", "Move", "Insert", "Replace")
DEFAULT_CAP = 64


@dataclass(frozen=True)
class CompositionStyle:
    name: str
    arity: int | None  # None for variable length
    admissible_types: tuple  # one tuple of categories per position
    ctx_types: tuple
    same_type_required: bool
    predicate_params: tuple  # (name, default, 'max' | 'min')
    allowed_mutators: tuple

    def defaults(self) -> dict:
        return {name: default for name, default, _ in self.predicate_params}

    def bounds(self, overrides: dict | None = None) -> dict:
        """Default bounds updated with ``overrides``; unknown keys raise KeyError."""
        out = self.defaults()
        for key, value in (overrides or {}).items():
            if key not in out:
                raise KeyError(f"style {self.name} has no bound {key!r}")
            out[key] = value
        return out

    def unbounded(self) -> dict:
        return {name: None for name, _, _ in self.predicate_params}


_LOOPISH = ("Loop", "FuncCall", "Arithmetic", "Logical")

STYLES: dict[str, CompositionStyle] = {
    s.name: s for s in (
        CompositionStyle("Cousins", 2, (_LOOPISH, _LOOPISH), ("If-Else", "Loop", "Func"), True,
                         (("k", 0, "max"), ("d", 0, "max")), MUTATORS),
        CompositionStyle("Nesting", 2, (("Loop", "If-Else"),) * 2, ("Loop", "Func"), True,
                         (("d", 2, "max"),), MUTATORS),
        CompositionStyle("Precedes", 2, (("FuncCall", "MemRef", "Arithmetic"),) * 2, ("Loop", "Func"),
                         False, (), ("Move", "Insert", "Replace")),
        CompositionStyle("Balanced", 3, (("If-Else",), ("Loop", "FuncCall", "Arithmetic", "MemRef"),
                                         ("Loop", "FuncCall", "Arithmetic", "MemRef")),
                         ("If-Else", "Loop", "Func"), True, (("d", 2, "max"),), MUTATORS),
        CompositionStyle("Sequence", None, (("Loop", "FuncCall", "Vector", "Arithmetic"),),
                         ("Loop", "Func"), True, (("l", 2, "min"),), ("Replicate", "Insert", "Replace")),
        CompositionStyle("Exists", 1, (("Func", "Loop", "If-Else", "FuncCall", "MemRef", "Vector",
                                        "Arithmetic"),),
                         ("Vector", "Loop", "If-Else", "Func", "Program"), False,
                         (("l", 1, "min"),), ("Insert", "Replace")),
    )
}


def admissible_pairs(styles: Iterable[str] | None = None) -> list:
    names = list(styles) if styles is not None else list(STYLES)
    return [(s, m) for s in names for m in STYLES[s].allowed_mutators]


def get_style(name: str) -> CompositionStyle:
    try:
        return STYLES[name]
    except KeyError:
        raise KeyError(f"unknown style {name!r}; choose from {', '.join(STYLES)}") from None


def types_of(categories: Iterable[str], ann: AnnotationSet) -> frozenset:
    return ann.expand_all(CATEGORY[c] for c in categories)


@dataclass(frozen=True, eq=False)
class StyleMatch:
    style: str
    nodes: tuple
    ctx: ConstructNode
    predicate_values: dict = field(default_factory=dict)
    donor_id: str = ""

    def key(self) -> tuple:
        return (self.style,
                tuple((n.ctype, n.token_span) for n in self.nodes),
                (self.ctx.ctype, self.ctx.token_span),
                tuple(sorted(self.predicate_values.items())))

    def order_key(self) -> tuple:
        return tuple(n.order for n in self.nodes)

    def signature(self) -> tuple:
        return tuple(n.ctype for n in self.nodes)

    def to_dict(self) -> dict:
        return {
            "style": self.style,
            "donor_id": self.donor_id,
            "nodes": [{"ctype": n.ctype, "span": list(n.token_span)} for n in self.nodes],
            "ctx": {"ctype": self.ctx.ctype, "span": list(self.ctx.token_span)},
            "predicates": dict(self.predicate_values),
        }


# --------------------------------------------------------------------------
# helpers shared by the scanner, the mutators and the validator


def lca(nodes) -> ConstructNode:
    """Lowest common ancestor-or-self in the construct tree."""
    paths = []
    for n in nodes:
        p = [n] + list(n.ancestors())
        paths.append(p[::-1])
    common = None
    for level in zip(*paths):
        if all(x is level[0] for x in level):
            common = level[0]
        else:
            break
    return common


def find_ctx(nodes, ctx_types: frozenset, chains: DeclUseChains, start=None) -> ConstructNode | None:
    """Lowest ancestor of admissible context type that contains ``nodes``.

    Starts at the LCA (the parent, for a single node) and climbs until the
    containment property holds.
    """
    if start is None:
        start = nodes[0].parent if len(nodes) == 1 else lca(nodes)
    node = start
    while node is not None:
        if node.ctype in ctx_types and contains(node, nodes, chains):
            return node
        node = node.parent
    return None


def token_gap(a: ConstructNode, b: ConstructNode) -> int:
    """Tokens strictly between ``a`` (earlier) and ``b``."""
    return b.token_span[0] - a.token_span[1] - 1


def nesting_depth(anc: ConstructNode, desc: ConstructNode, types: frozenset) -> int:
    d = 0
    node = desc
    while node is not anc:
        if node.ctype in types:
            d += 1
        node = node.parent
    return d


def branches(if_node: ConstructNode) -> list:
    """Parse subtrees forming the branches of an if-like construct."""
    kids = [c for c in if_node.parse_ref.children if c.token is None]
    if not kids:
        return []
    last = kids[-1].kind
    return [c for c in kids if c.kind == last]


def branch_index(if_node: ConstructNode, node: ConstructNode) -> int | None:
    for i, b in enumerate(branches(if_node)):
        if node.parse_ref.is_descendant_of(b):
            return i
    return None


def within(value, bound, sense: str) -> bool:
    if bound is None:
        return True
    return value <= bound if sense == "max" else value >= bound


def satisfies(style: CompositionStyle, values: dict, bounds: dict) -> bool:
    for name, _, sense in style.predicate_params:
        if not within(values[name], bounds.get(name), sense):
            return False
    return True


def _candidates(root: ConstructNode, types: frozenset) -> list:
    return [n for n in root.preorder() if n.ctype in types]


# --------------------------------------------------------------------------
# scanning


def scan(style: CompositionStyle | str, root: ConstructNode, chains: DeclUseChains,
         bounds: dict | None = None, cap: int | None = DEFAULT_CAP, donor_id: str = "") -> list:
    if isinstance(style, str):
        style = get_style(style)
    bounds = style.bounds(bounds)
    ann = chains.ann
    ctx_types = types_of(style.ctx_types, ann)
    found = _SCANNERS[style.name](style, root, chains, bounds, ctx_types, ann)
    found.sort(key=lambda m: m[0])
    if cap is not None:
        found = found[:cap]
    return [StyleMatch(style.name, tuple(nodes), ctx, values, donor_id) for _, nodes, ctx, values in found]


def _scan_cousins(style, root, chains, bounds, ctx_types, ann):
    types = types_of(style.admissible_types[0], ann)
    cands = _candidates(root, types)
    out = []
    dmax = bounds.get("d")
    for i, a in enumerate(cands):
        for b in cands[i + 1:]:
            if a.ctype != b.ctype or b.is_descendant_of(a):
                continue
            d = token_gap(a, b)
            if dmax is not None and d > dmax:
                continue
            ctx = find_ctx([a, b], ctx_types, chains)
            if ctx is None:
                continue
            k = max(a.depth, b.depth) - ctx.depth - 1
            values = {"k": k, "d": d}
            if satisfies(style, values, bounds):
                out.append(((a.order, b.order), (a, b), ctx, values))
    return out


def _scan_nesting(style, root, chains, bounds, ctx_types, ann):
    types = types_of(style.admissible_types[0], ann)
    out = []
    for a in _candidates(root, types):
        for b in a.preorder():
            if b is a or b.ctype != a.ctype:
                continue
            values = {"d": nesting_depth(a, b, types)}
            if not satisfies(style, values, bounds):
                continue
            ctx = find_ctx([a, b], ctx_types, chains)
            if ctx is not None:
                out.append(((a.order, b.order), (a, b), ctx, values))
    return out


def _scan_precedes(style, root, chains, bounds, ctx_types, ann):
    types = types_of(style.admissible_types[0], ann)
    cands = _candidates(root, types)
    out = []
    for i, a in enumerate(cands):
        for b in cands[i + 1:]:
            if a.token_span[1] >= b.token_span[0]:
                continue
            ctx = find_ctx([a, b], ctx_types, chains)
            if ctx is not None:
                out.append(((a.order, b.order), (a, b), ctx, {}))
    return out


def _scan_balanced(style, root, chains, bounds, ctx_types, ann):
    if_types = types_of(style.admissible_types[0], ann)
    types = types_of(style.admissible_types[1], ann)
    out = []
    for top in _candidates(root, if_types):
        inner = [n for n in top.preorder() if n is not top and n.ctype in types]
        located = [(n, branch_index(top, n)) for n in inner]
        located = [(n, bi) for n, bi in located if bi is not None]
        for x, bx in located:
            for y, by in located:
                if bx >= by or x.ctype != y.ctype:
                    continue
                values = {"d": max(x.depth, y.depth) - top.depth}
                if not satisfies(style, values, bounds):
                    continue
                ctx = find_ctx([top, x, y], ctx_types, chains)
                if ctx is not None:
                    out.append(((top.order, x.order, y.order), (top, x, y), ctx, values))
    return out


def adjacency(cands: list) -> dict:
    """Successor lists: same construct type, nothing in between."""
    by_start: dict = {}
    for n in cands:
        by_start.setdefault(n.token_span[0], []).append(n)
    succ = {}
    for a in cands:
        succ[id(a)] = [b for b in by_start.get(a.token_span[1] + 1, ()) if b.ctype == a.ctype]
    return succ


def _scan_sequence(style, root, chains, bounds, ctx_types, ann):
    types = types_of(style.admissible_types[0], ann)
    cands = _candidates(root, types)
    succ = adjacency(cands)
    has_pred = {id(b) for a in cands for b in succ[id(a)]}
    out = []

    def walk(path):
        nxt = succ[id(path[-1])]
        if not nxt:
            values = {"l": len(path)}
            if satisfies(style, values, bounds):
                ctx = find_ctx(list(path), ctx_types, chains)
                if ctx is not None:
                    out.append((tuple(n.order for n in path), tuple(path), ctx, values))
            return
        for b in nxt:
            walk(path + [b])

    for a in cands:
        if id(a) not in has_pred:
            walk([a])
    return out


def _scan_exists(style, root, chains, bounds, ctx_types, ann):
    types = types_of(style.admissible_types[0], ann)
    out = []
    for n in _candidates(root, types):
        if n.parent is None:
            continue
        values = {"l": n.token_span[1] - n.token_span[0] + 1}
        if not satisfies(style, values, bounds):
            continue
        ctx = find_ctx([n], ctx_types, chains)
        if ctx is not None:
            out.append(((n.order,), (n,), ctx, values))
    return out


_SCANNERS = {
    "Cousins": _scan_cousins,
    "Nesting": _scan_nesting,
    "Precedes": _scan_precedes,
    "Balanced": _scan_balanced,
    "Sequence": _scan_sequence,
    "Exists": _scan_exists,
}


# --------------------------------------------------------------------------
# match pools


class MatchPool:
    """Write-once collection of donor matches grouped by (style, signature)."""

    def __init__(self, matches: Iterable[StyleMatch] = ()):
        groups: dict = {}
        for m in matches:
            groups.setdefault((m.style, m.signature()), []).append(m)
        self._groups = {k: tuple(v) for k, v in groups.items()}
        self._by_style: dict = {}
        for (style, _), ms in self._groups.items():
            self._by_style.setdefault(style, []).extend(ms)
        self._by_style = {k: tuple(v) for k, v in self._by_style.items()}

    @property
    def groups(self) -> dict:
        return dict(self._groups)

    def styles(self) -> list:
        return [s for s in STYLES if s in self._by_style]

    def matches(self, style: str | None = None) -> tuple:
        if style is not None:
            return self._by_style.get(style, ())
        return tuple(m for s in self.styles() for m in self._by_style[s])

    def __len__(self) -> int:
        return sum(len(v) for v in self._groups.values())


def extract_pool(corpus, styles=None, bounds: dict | None = None, cap: int | None = DEFAULT_CAP) -> MatchPool:
    """``corpus`` holds (donor_id, construct root, chains) triples.

    ``bounds`` maps style name to bound overrides.
    """
    chosen = [get_style(s) if isinstance(s, str) else s for s in (styles or list(STYLES))]
    found = []
    for donor_id, root, chains in corpus:
        for st in chosen:
            found.extend(scan(st, root, chains, (bounds or {}).get(st.name), cap, donor_id))
    return MatchPool(found)
