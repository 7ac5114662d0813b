"""Replicate, Move, Insert and Replace.

A mutation is planned against a recipient program: pick a context construct
similar to the donor's, map the donor constructs onto recipient ones, choose
where material goes, rebind free uses to visible declarations, and splice the
material into the recipient's token stream. The result is re-parsed and, by
default, checked: it must parse, must not add unresolved uses, and for
Replicate/Insert the style must be found again at the bound context.
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field

from .constructs import ConstructNode, ContractError, Def, DeclUseChains
from .grammar import ParseError, ParseNode, Token, TokenizeError, _separator
from .program import Program
from .styles import (STYLES, StyleMatch, branch_index, branches, find_ctx, lca, scan,
                     types_of)

log = logging.getLogger(__name__)

ASSIGN_LIKE = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^=", "++", "--"})


class Rejected(Exception):
    """An edit that cannot be made on this recipient; the caller moves on."""

    reason = "Rejected"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(f"{self.reason}: {detail}" if detail else self.reason)


class NoCandidateContext(Rejected):
    reason = "NoCandidateContext"


class NoAnchorMatch(Rejected):
    reason = "NoAnchorMatch"


class NoLocation(Rejected):
    reason = "NoLocation"


class RebindFailure(Rejected):
    reason = "RebindFailure"


class MoveNoCandidate(Rejected):
    reason = "MoveNoCandidate"


class ScopeViolation(Rejected):
    reason = "ScopeViolation"


class RebuildFailure(Rejected):
    reason = "RebuildFailure"


class SerializationFailure(Rejected):
    """The spliced text does not parse. This is a bug, so it is logged loudly."""

    reason = "SerializationFailure"


REJECT_REASONS = tuple(c.reason for c in (NoCandidateContext, NoAnchorMatch, NoLocation, RebindFailure,
                                          MoveNoCandidate, ScopeViolation, RebuildFailure,
                                          SerializationFailure))


# --------------------------------------------------------------------------
# partialization and similarity


@dataclass(frozen=True)
class PartialContext:
    removed_index: int
    removed: ConstructNode
    anchors: tuple
    hole: tuple  # (parent construct in the donor, child ordinal)
    template_ctx: ConstructNode


def removable_indices(match: StyleMatch) -> list:
    n = len(match.nodes)
    if match.style == "Nesting":
        return [1]
    if match.style == "Balanced":
        return [1, 2]
    return list(range(n))


def partialize(match: StyleMatch, i: int | None = None, rng: random.Random | None = None) -> PartialContext:
    if len(match.nodes) < 2:
        raise ContractError("partialization requires k >= 2")
    allowed = removable_indices(match)
    if i is None:
        i = (rng or random.Random(0)).choice(allowed)
    elif i not in allowed:
        raise ContractError(f"{match.style} cannot remove position {i}")
    removed = match.nodes[i]
    anchors = tuple(n for j, n in enumerate(match.nodes) if j != i)
    parent = removed.parent
    return PartialContext(i, removed, anchors, (parent, parent.children.index(removed)), match.ctx)


def _role_types(node: ConstructNode) -> frozenset:
    ann = node.tree.ann if node.tree is not None else None
    if ann is None:
        return frozenset()
    return frozenset(filter(None, (ann.role(r) for r in ("use", "def", "type"))))


def klr_labels(node: ConstructNode, k_anc: int = 2, l_sib: int = 1, r_sib: int = 1) -> list:
    """Own label, k ancestor labels (root-padded), l left and r right sibling labels."""
    labels = [node.ctype]
    anc = list(node.ancestors())
    labels += [anc[j].ctype if j < len(anc) else "^" for j in range(k_anc)]
    roles = _role_types(node)
    if node.parent is None:
        left, right = [], []
    else:
        sibs = [s for s in node.parent.children if s is node or s.ctype not in roles]
        idx = next(j for j, s in enumerate(sibs) if s is node)
        left, right = sibs[:idx][::-1], sibs[idx + 1:]
    labels += [left[j].ctype if j < len(left) else "<" for j in range(l_sib)]
    labels += [right[j].ctype if j < len(right) else ">" for j in range(r_sib)]
    return labels


def structural_similarity(template: ConstructNode, candidate: ConstructNode,
                          k_anc: int = 2, l_sib: int = 1, r_sib: int = 1) -> float:
    a = klr_labels(template, k_anc, l_sib, r_sib)
    b = klr_labels(candidate, k_anc, l_sib, r_sib)
    return sum(x == y for x, y in zip(a, b)) / len(a)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def token_text(node: ParseNode) -> str:
    return " ".join(leaf.token.text for leaf in node.leaves())


# --------------------------------------------------------------------------
# parse-tree positions


@dataclass(frozen=True)
class Location:
    """Insertion point: before ``parent.children[child_index]`` in a repeated slot."""

    parent: ParseNode
    slot: int
    item_kind: str
    child_index: int
    boundary: int  # token index the inserted material starts at
    enclosing: ConstructNode
    ref_item: ParseNode | None = None

    def describe(self) -> dict:
        return {"parent": self.parent.kind, "child_index": self.child_index, "boundary": self.boundary,
                "enclosing": self.enclosing.ctype}


def _is_construct(program: Program, pnode: ParseNode, roles: frozenset) -> bool:
    c = program.root.tree.of(pnode)
    return c is not None and c.ctype not in roles


def item_of(program: Program, pnode: ParseNode) -> ParseNode | None:
    """Lowest repeated-slot ancestor-or-self with no other construct in between."""
    roles = _role_types(program.root)
    node = pnode
    while node is not None:
        if node is not pnode and _is_construct(program, node, roles):
            return None
        if node.rep:
            return node
        node = node.parent
    return None


def _boundary(parent: ParseNode, child_index: int) -> int:
    if child_index < len(parent.children):
        return parent.children[child_index].token_span[0]
    return parent.token_span[1] + 1


def location_at(program: Program, parent: ParseNode, child_index: int, slot: int,
                ref_item: ParseNode | None = None) -> Location:
    g = program.lang.grammar
    kind = g.rules[parent.kind][parent.alt_index][slot].kind
    return Location(parent, slot, kind, child_index, _boundary(parent, child_index),
                    program.root.tree.enclosing(parent), ref_item)


def list_sites(program: Program, start: ParseNode) -> list:
    """Repeated slots reachable from ``start`` without entering another construct.

    Returns (parent, slot, candidate child indices) in breadth-first order.
    """
    g = program.lang.grammar
    roles = _role_types(program.root)
    out = []
    queue = [start]
    while queue:
        node = queue.pop(0)
        if node.token is not None:
            continue
        if node is not start and _is_construct(program, node, roles):
            continue
        alt = g.rules[node.kind][node.alt_index]
        for s, sym in enumerate(alt):
            if not sym.repeated:
                continue
            idxs = [j for j, c in enumerate(node.children) if c.slot == s]
            if idxs:
                positions = idxs + [idxs[-1] + 1]
            else:
                after = [j for j, c in enumerate(node.children) if c.slot > s]
                positions = [after[0] if after else len(node.children)]
            out.append((node, s, positions))
        queue.extend(node.children)
    return out


def _insertable(program: Program, site_kind: str, node: ParseNode) -> bool:
    g = program.lang.grammar
    return site_kind == node.kind or g.derives(site_kind, node.kind)


def _slot_accepts(program: Program, target: ParseNode, kind: str) -> bool:
    sym = program.lang.grammar.symbol_at(target)
    if sym is None:
        return target.kind == kind
    return sym.kind == kind or program.lang.grammar.derives(sym.kind, kind)


# --------------------------------------------------------------------------
# context matching


@dataclass
class ContextBinding:
    recipient_ctx: ConstructNode
    anchor_map: tuple  # (donor node, recipient node) pairs
    location: Location | None
    similarity_score: float

    def describe(self) -> dict:
        return {
            "recipient_ctx": {"ctype": self.recipient_ctx.ctype, "span": list(self.recipient_ctx.token_span)},
            "anchors": [{"donor": list(a.token_span), "recipient": list(b.token_span), "ctype": a.ctype}
                        for a, b in self.anchor_map],
            "location": self.location.describe() if self.location else None,
            "similarity": round(self.similarity_score, 6),
        }


def _map_nodes(donors, cand: ConstructNode, style: str, match: StyleMatch, recipient: Program) -> list:
    pool: dict = {}
    for n in cand.preorder():
        pool.setdefault(n.ctype, []).append(n)
    mapped: list = []
    used: set = set()
    for a in donors:
        options = list(pool.get(a.ctype, ()))
        # keep donor ancestry: a node nested in an earlier donor node stays nested
        for prev_d, prev_r in mapped:
            if a.is_descendant_of(prev_d) and a is not prev_d:
                options = [o for o in options if o.is_descendant_of(prev_r) and o is not prev_r]
        if style == "Balanced" and a is not match.nodes[0]:
            top = next((r for d, r in mapped if d is match.nodes[0]), None)
            if top is not None:
                taken = {branch_index(top, r) for d, r in mapped if r is not top}
                options = [o for o in options if branch_index(top, o) not in (None, *taken)]
        if style == "Sequence":
            options = [o for o in options if (it := item_of(recipient, o.parse_ref)) is not None
                       and it.token_span == o.token_span]
        if not options:
            raise NoAnchorMatch(f"no {a.ctype} for anchor in candidate context")
        ranked = sorted(options, key=lambda o: (-structural_similarity(a, o), o.order))
        fresh = [o for o in ranked if id(o) not in used]
        pick = fresh[0] if fresh else ranked[0]
        used.add(id(pick))
        mapped.append((a, pick))
    return mapped


def _locate(recipient: Program, match: StyleMatch, pc: PartialContext, mapped: list,
            rng: random.Random) -> Location:
    amap = {id(d): r for d, r in mapped}
    style = match.style
    if style in ("Cousins", "Sequence", "Precedes"):
        i = pc.removed_index
        if i > 0:
            ref, after = amap[id(match.nodes[i - 1])], True
        else:
            ref, after = amap[id(match.nodes[1])], False
        item = item_of(recipient, ref.parse_ref)
        if item is None:
            raise NoLocation(f"{ref.ctype} is not in a repeated slot")
        idx = item.parent.children.index(item)
        return location_at(recipient, item.parent, idx + 1 if after else idx, item.slot, item)
    if style == "Nesting":
        host = amap[id(match.nodes[0])]
        sites = list_sites(recipient, host.parse_ref)
        if not sites:
            raise NoLocation(f"{host.ctype} has no statement list to nest into")
        parent, slot, positions = sites[0]
        return location_at(recipient, parent, rng.choice(positions), slot)
    if style == "Balanced":
        top = amap[id(match.nodes[0])]
        other = next(r for d, r in mapped if d is not match.nodes[0])
        brs = branches(top)
        own = branch_index(top, other)
        free = [j for j in range(len(brs)) if j != own]
        if not free:
            raise NoLocation("if construct has a single branch")
        lacking = [j for j in free if not any(n.ctype == pc.removed.ctype and branch_index(top, n) == j
                                              for n in top.preorder() if n is not top)]
        target = lacking[0] if lacking else free[-1]
        sites = list_sites(recipient, brs[target])
        if not sites:
            raise NoLocation("target branch has no statement list")
        parent, slot, positions = sites[0]
        return location_at(recipient, parent, rng.choice(positions), slot)
    raise NoLocation(f"style {style} has no partial location")


def match_context(recipient: Program, match: StyleMatch, pc: PartialContext | None = None,
                  rng: random.Random | None = None, k_anc: int = 2, l_sib: int = 1,
                  r_sib: int = 1) -> ContextBinding:
    rng = rng or random.Random(0)
    template = match.ctx
    cands = [n for n in recipient.root.preorder() if n.ctype == template.ctype]
    if not cands:
        raise NoCandidateContext(f"recipient has no {template.ctype}")
    scored = sorted(((structural_similarity(template, c, k_anc, l_sib, r_sib), c) for c in cands),
                    key=lambda sc: (-sc[0], sc[1].order))
    style = STYLES[match.style]
    ctx_types = types_of(style.ctx_types, recipient.lang.ann)
    donors = pc.anchors if pc is not None else match.nodes
    first_error = None
    for score, cand in scored:
        try:
            mapped = _map_nodes(donors, cand, match.style, match, recipient)
            loc = _locate(recipient, match, pc, mapped, rng) if pc is not None else None
            mapped_r = [r for _, r in mapped]
            if loc is not None:
                start = lca(mapped_r + [loc.enclosing])
                got = find_ctx(mapped_r, ctx_types, recipient.chains, start=start)
            else:
                got = find_ctx(mapped_r, ctx_types, recipient.chains)
            if got is not cand:
                raise NoAnchorMatch("anchors do not bind to this context")
            return ContextBinding(cand, tuple(mapped), loc, score)
        except Rejected as exc:
            first_error = first_error or exc
    raise first_error


# --------------------------------------------------------------------------
# material and rebinding


def _uses_under(chains: DeclUseChains, pnode: ParseNode) -> list:
    lo, hi = pnode.token_span
    return [u for u in chains.uses
            if lo <= u.node.token_span[0] <= hi and u.node.parse_ref.is_descendant_of(pnode)]


def _defs_under(chains: DeclUseChains, pnode: ParseNode) -> list:
    lo, hi = pnode.token_span
    return [d for d in chains.defs
            if lo <= d.position <= hi and d.node.parse_ref.is_descendant_of(pnode)]


def _key(tok: Token) -> tuple:
    return (id(tok.src), tok.index)


class Material:
    """Tokens to splice in: a base subtree, optionally with one subtree swapped for a filler."""

    def __init__(self, prog: Program, node: ParseNode, hole: ParseNode | None = None,
                 filler: tuple | None = None):
        self.base = (prog, node)
        self.hole = hole
        self.filler = filler  # (Program, ParseNode)

    def _base_leaf_ok(self, pnode: ParseNode) -> bool:
        return self.hole is None or not pnode.is_descendant_of(self.hole)

    def tokens(self, renames: dict) -> list:
        def conv(tok):
            new = renames.get(_key(tok))
            return tok.renamed(new) if new is not None else tok

        out = []
        placed = False
        for leaf in self.base[1].leaves():
            if not self._base_leaf_ok(leaf):
                if not placed:
                    out.extend(conv(l.token) for l in self.filler[1].leaves())
                    placed = True
                continue
            out.append(conv(leaf.token))
        return out

    def _parts(self) -> list:
        parts = [self.base]
        if self.filler is not None:
            parts.append(self.filler)
        return parts

    def uses(self) -> list:
        out = []
        for n, (prog, node) in enumerate(self._parts()):
            for u in _uses_under(prog.chains, node):
                if n or self._base_leaf_ok(u.node.parse_ref):
                    out.append((prog, u))
        return out

    def defs(self) -> list:
        out = []
        for n, (prog, node) in enumerate(self._parts()):
            for d in _defs_under(prog.chains, node):
                if n or self._base_leaf_ok(d.node.parse_ref):
                    out.append((prog, d))
        return out

    def owns(self, d: Def) -> bool:
        p = d.node.parse_ref
        if self.filler is not None and p.is_descendant_of(self.filler[1]):
            return True
        return p.is_descendant_of(self.base[1]) and self._base_leaf_ok(p)

    def roots(self) -> list:
        return [node for _, node in self._parts()]


def _written(prog: Program, use_node: ConstructNode) -> bool:
    toks = prog.tree.tokens
    lo, hi = use_node.token_span
    nxt = toks[hi + 1].text if hi + 1 < len(toks) else ""
    prv = toks[lo - 1].text if lo > 0 else ""
    return nxt in ASSIGN_LIKE or prv in ("++", "--")


def visible_defs(recipient: Program, loc_enclosing: ConstructNode, boundary: int, ctx: ConstructNode,
                 removed: list = ()) -> dict:
    """name -> Def visible at ``boundary``; innermost scope and latest def win; only defs inside ctx."""
    ann = recipient.lang.ann
    scope_types = ann.expand_all(ann.scopes)
    out: dict = {}
    node = loc_enclosing
    while node is not None:
        if node.ctype in scope_types:
            for d in sorted(recipient.chains.scopes.get(id(node), ()), key=lambda d: -d.position):
                if d.position >= boundary or d.name in out:
                    continue
                if any(d.node.parse_ref.is_descendant_of(r) for r in removed):
                    continue
                out[d.name] = d
        node = node.parent
    return {k: d for k, d in out.items() if d.node.is_descendant_of(ctx)}


def _all_names(recipient: Program, extra=()) -> set:
    names = {t.text for t in recipient.tree.tokens}
    names.update(extra)
    return names


def _fresh(name: str, taken: set) -> str:
    n = 1
    while f"{name}_{n}" in taken:
        n += 1
    return f"{name}_{n}"


def reparameterize(material: Material, recipient: Program, loc_enclosing: ConstructNode, boundary: int,
                   ctx: ConstructNode, mode: str, rng: random.Random, removed: list = (),
                   taken: set | None = None) -> tuple:
    """Choose names for the free uses and local defs of ``material``.

    Uses from a foreign program keep their name when it resolves to a
    compatible declaration and are rebound otherwise. Recipient uses follow
    ``mode``: 'move' keeps a binding that is still visible, 'replicate' also
    moves written variables to a different compatible one.
    Returns (renames, rebind_map).
    """
    ann = recipient.lang.ann
    visible = visible_defs(recipient, loc_enclosing, boundary, ctx, removed)
    renames: dict = {}
    rebind_map: list = []
    taken = taken if taken is not None else _all_names(recipient)

    # local defs that land in the scope at the insertion point must not collide
    scope_types = ann.expand_all(ann.scopes)
    roots = material.roots()
    landing = loc_enclosing
    while landing is not None and landing.ctype not in scope_types:
        landing = landing.parent
    occupied = {d.name for d in recipient.chains.scopes.get(id(landing), ())
                if not any(d.node.parse_ref.is_descendant_of(r) for r in removed)} if landing else set()
    local_new: dict = {}
    for prog, d in material.defs():
        inner = any(a.ctype in scope_types and any(a.parse_ref.is_descendant_of(r) for r in roots)
                    for a in d.node.ancestors())
        if inner:
            continue
        if d.name in occupied or d.name in {v for v in local_new.values()}:
            new = _fresh(d.name, taken)
            taken.add(new)
            local_new[id(d)] = new
            renames[_key(_token_of(prog, d.node))] = new
            rebind_map.append({"def": d.name, "to": new, "kind": "fresh"})
        else:
            local_new[id(d)] = d.name
            occupied.add(d.name)

    groups: dict = {}
    for prog, u in material.uses():
        d = u.resolved
        if d is not None and material.owns(d):
            if id(d) in local_new and local_new[id(d)] != d.name:
                renames[_key(_token_of(prog, u.node))] = local_new[id(d)]
            continue
        key = id(d) if d is not None else ("unresolved", u.name)
        groups.setdefault(key, []).append((prog, u))

    for key, members in groups.items():
        prog, first = members[0]
        orig = first.resolved
        orig_type = orig.type_label if orig is not None else "?"
        name = first.name
        current = visible.get(name)
        if prog is not recipient:
            keep = current is not None and (orig_type == "?" or ann.compatible(orig_type, current.type_label))
            force = False
        else:
            keep = current is not None and current is orig
            force = mode == "replicate" and any(_written(p, u.node) for p, u in members)
        if keep and not force:
            continue
        cands = [d for d in sorted(visible.values(), key=lambda d: (d.position, d.name))
                 if orig_type == "?" or ann.compatible(orig_type, d.type_label)]
        if force:
            others = [d for d in cands if d.name != name]
            if others:
                cands = others
            elif keep:
                continue
        if not cands:
            raise RebindFailure(f"no visible {orig_type} declaration for {name!r}")
        pick = rng.choice(cands)
        for p, u in members:
            renames[_key(_token_of(p, u.node))] = pick.name
        rebind_map.append({"use": name, "to": pick.name, "type": orig_type, "count": len(members)})
    return renames, rebind_map


def _token_of(prog: Program, node: ConstructNode) -> Token:
    for leaf in node.parse_ref.leaves():
        if not leaf.kind.startswith("'"):
            return leaf.token
    return node.parse_ref.leaves()[0].token


# --------------------------------------------------------------------------
# splicing


@dataclass
class Edit:
    start: int  # first original token affected (insertion boundary when start == end)
    end: int  # exclusive
    material: list  # Tokens
    seq: int = 0
    indent: str | None = None  # whitespace before inserted material


def _gap(tokens: list, src: str, i: int) -> str:
    """Original text between tokens i-1 and i."""
    if i <= 0 or i >= len(tokens):
        return "\n"
    return src[tokens[i - 1].end:tokens[i].start]


def _indent(tokens: list, src: str, i: int) -> str:
    g = _gap(tokens, src, i)
    return g[g.rindex("\n"):] if "\n" in g else " "


def indent_for(program: Program, loc: Location) -> str:
    """Whitespace that precedes a neighbouring item in the same list."""
    items = [j for j, c in enumerate(loc.parent.children) if c.slot == loc.slot and c.n_tokens > 0]
    if not items:
        return " "
    after = [j for j in items if j >= loc.child_index]
    ref = loc.parent.children[after[0] if after else items[-1]]
    return _indent(program.tree.tokens, program.source, ref.token_span[0])


def render(recipient: Program, edits: list) -> tuple:
    """Apply non-overlapping edits; returns (text, inserted token ranges in the new stream)."""
    tokens = recipient.tree.tokens
    src = recipient.source
    edits = sorted(edits, key=lambda e: (e.start, e.end, e.seq))
    for a, b in zip(edits, edits[1:]):
        if b.start < a.end:
            raise Rejected("overlapping edits")
    pieces: list = []
    pos = 0
    inserted = []
    count = 0

    def emit_tokens(toks):
        nonlocal count
        pieces.extend(toks)
        count += len(toks)

    for e in edits:
        emit_tokens(tokens[pos:e.start])
        pos = max(pos, e.start)
        if e.material:
            if e.start == e.end:
                ind = e.indent or _indent(tokens, src, e.start)
                pieces.append(ind)
                inserted.append((count, count + len(e.material) - 1))
                emit_tokens(e.material)
                pieces.append(_gap(tokens, src, e.start) if 0 < e.start < len(tokens) else ind)
            else:
                pieces.append(_gap(tokens, src, e.start))
                inserted.append((count, count + len(e.material) - 1))
                emit_tokens(e.material)
                pieces.append(_gap(tokens, src, e.end))
        elif e.end > e.start:
            pieces.append(_gap(tokens, src, e.start))
        pos = max(pos, e.end)
    emit_tokens(tokens[pos:])

    out = [src[:tokens[0].start]] if tokens else []
    prev = None
    pending = None
    for p in pieces:
        if isinstance(p, str):
            if pending is None:
                pending = p
            continue
        if prev is not None:
            if pending:
                out.append(pending)
            elif pending is None and p.src is prev.src and p.index == prev.index + 1:
                out.append(p.src[prev.end:p.start])
            else:
                out.append(_separator(prev.text, p.text))
        out.append(p.text)
        prev = p
        pending = None
    if tokens:
        out.append(src[tokens[-1].end:])
    return "".join(out), inserted


# --------------------------------------------------------------------------
# plans


@dataclass
class MutationPlan:
    match: StyleMatch
    kind: str
    binding: ContextBinding
    rebind_map: list
    donor: Program
    recipient: Program
    seed: int
    edits: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)


@dataclass
class MutatedProgram:
    text: str
    provenance: dict
    reparse_ok: bool
    inserted: list = field(default_factory=list)
    program: Program | None = None


def _transplant_nodes(match: StyleMatch) -> list:
    picked = [n for n in match.nodes if n is not match.ctx]
    return [n for n in picked if not any(o is not n and n.is_descendant_of(o) for o in picked)]


def _clone_material(recipient: Program, anchor: ConstructNode, loc: Location) -> Material:
    item = item_of(recipient, anchor.parse_ref)
    for cand in (anchor.parse_ref, item):
        if cand is not None and _insertable(recipient, loc.item_kind, cand):
            return Material(recipient, cand)
    raise NoLocation(f"{anchor.ctype} cannot be placed in a {loc.item_kind} list")


def plan_replicate(match, donor, recipient, rng, seed, i=None) -> MutationPlan:
    pc = partialize(match, i, rng)
    binding = match_context(recipient, match, pc, rng)
    eligible = [r for d, r in binding.anchor_map if d.ctype == pc.removed.ctype]
    if not eligible:
        raise NoAnchorMatch("no same-type anchor to clone")
    anchor = rng.choice(eligible)
    loc = binding.location
    material = _clone_material(recipient, anchor, loc)
    renames, rebind_map = reparameterize(material, recipient, loc.enclosing, loc.boundary,
                                         binding.recipient_ctx, "replicate", rng)
    edit = Edit(loc.boundary, loc.boundary, material.tokens(renames), 0, indent_for(recipient, loc))
    plan = MutationPlan(match, "Replicate", binding, rebind_map, donor, recipient, seed, [edit])
    plan.notes = {"removed_index": pc.removed_index, "cloned": list(anchor.token_span)}
    return plan


def _move_candidates(recipient: Program, pc: PartialContext, binding: ContextBinding) -> list:
    loc = binding.location
    anchors = [r for _, r in binding.anchor_map]
    g = recipient.lang.grammar
    removed_text = " ".join(token_text(pc.removed.parse_ref).split())
    out = []
    for x in recipient.root.preorder():
        if x.ctype != pc.removed.ctype or any(x is a for a in anchors):
            continue
        item = item_of(recipient, x.parse_ref)
        if item is None:
            continue
        if any(a.parse_ref.is_descendant_of(item) for a in anchors) or loc.parent.is_descendant_of(item):
            continue
        lo, hi = item.token_span
        if lo <= loc.boundary <= hi + 1:
            continue  # inside the item, or a move that changes nothing
        sym = g.rules[item.parent.kind][item.parent.alt_index][item.slot]
        if sym.op == "+" and sum(1 for c in item.parent.children if c.slot == item.slot) == 1:
            continue
        inner = _defs_under(recipient.chains, item)
        leaked = any(u.resolved is d and not u.node.parse_ref.is_descendant_of(item)
                     for d in inner for u in recipient.chains.uses)
        if leaked:
            continue
        if _insertable(recipient, loc.item_kind, item):
            node = item
        elif item.token_span == x.token_span and _insertable(recipient, loc.item_kind, x.parse_ref):
            node = x.parse_ref
        else:
            continue
        dist = levenshtein(" ".join(token_text(x.parse_ref).split()), removed_text)
        out.append((dist, x.order, x, item, node))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def plan_move(match, donor, recipient, rng, seed, i=None) -> MutationPlan:
    pc = partialize(match, i, rng)
    binding = match_context(recipient, match, pc, rng)
    cands = _move_candidates(recipient, pc, binding)
    if not cands:
        raise MoveNoCandidate(f"no movable {pc.removed.ctype} in recipient")
    dist, _, x, item, node = cands[0]
    loc = binding.location
    material = Material(recipient, node)
    renames, rebind_map = reparameterize(material, recipient, loc.enclosing, loc.boundary,
                                         binding.recipient_ctx, "move", rng, removed=[item])
    lo, hi = item.token_span
    edits = [Edit(lo, hi + 1, [], 0),
             Edit(loc.boundary, loc.boundary, material.tokens(renames), 1, indent_for(recipient, loc))]
    plan = MutationPlan(match, "Move", binding, rebind_map, donor, recipient, seed, edits)
    plan.notes = {"removed_index": pc.removed_index, "moved": list(x.token_span), "distance": dist}
    return plan


def _crossover_material(recipient, donor, n: ConstructNode, target: ConstructNode, insert: bool):
    """Material and its placement for one donor node against its recipient match."""
    dnode = n.parse_ref
    if not insert:
        if not _slot_accepts(recipient, target.parse_ref, dnode.kind):
            raise NoLocation(f"{dnode.kind} does not fit where {target.parse_ref.kind} is")
        return Material(donor, dnode), None
    item = item_of(recipient, target.parse_ref)
    if item is None:
        raise NoLocation(f"{target.ctype} is not in a repeated slot")
    idx = item.parent.children.index(item)
    loc = location_at(recipient, item.parent, idx + 1, item.slot, item)
    if _insertable(recipient, loc.item_kind, dnode):
        return Material(donor, dnode), loc
    if _slot_accepts(recipient, target.parse_ref, dnode.kind):
        return Material(recipient, item, target.parse_ref, (donor, dnode)), loc
    raise NoLocation(f"{dnode.kind} cannot be placed next to {target.parse_ref.kind}")


def _plan_crossover(kind, match, donor, recipient, rng, seed) -> MutationPlan:
    binding = match_context(recipient, match, None, rng)
    amap = {id(d): r for d, r in binding.anchor_map}
    movers = _transplant_nodes(match)
    ctx = binding.recipient_ctx
    edits, rebind_map = [], []
    taken = _all_names(recipient)
    if kind == "Replace":
        targets = [amap[id(n)] for n in movers]
        for a in targets:
            for b in targets:
                if a is not b and a.is_descendant_of(b):
                    raise NoAnchorMatch("replacement targets overlap")
        if len({id(t) for t in targets}) != len(targets):
            raise NoAnchorMatch("two donor constructs map to one recipient construct")
        removed = [t.parse_ref for t in targets]
        for t in targets:
            inner = _defs_under(recipient.chains, t.parse_ref)
            if any(u.resolved is d and not u.node.parse_ref.is_descendant_of(t.parse_ref)
                   for d in inner for u in recipient.chains.uses):
                raise ScopeViolation(f"{t.ctype} declares names used elsewhere")
    else:
        removed = []
    for seq, n in enumerate(movers):
        target = amap[id(n)]
        material, loc = _crossover_material(recipient, donor, n, target, kind == "Insert")
        if loc is None:
            enclosing = recipient.root.tree.enclosing(target.parse_ref.parent)
            boundary = target.token_span[0]
        else:
            enclosing, boundary = loc.enclosing, loc.boundary
        renames, rb = reparameterize(material, recipient, enclosing, boundary, ctx, "move", rng,
                                     removed=removed, taken=taken)
        rebind_map.extend(rb)
        toks = material.tokens(renames)
        if loc is None:
            lo, hi = target.token_span
            edits.append(Edit(lo, hi + 1, toks, seq))
        else:
            edits.append(Edit(boundary, boundary, toks, seq, indent_for(recipient, loc)))
    plan = MutationPlan(match, kind, binding, rebind_map, donor, recipient, seed, edits)
    plan.notes = {"transplanted": [list(n.token_span) for n in movers]}
    return plan


PLANNERS = {
    "Replicate": plan_replicate,
    "Move": plan_move,
    "Insert": lambda m, d, r, rng, seed, i=None: _plan_crossover("Insert", m, d, r, rng, seed),
    "Replace": lambda m, d, r, rng, seed, i=None: _plan_crossover("Replace", m, d, r, rng, seed),
}


class NotAllowed(ValueError):
    pass


def plan(match: StyleMatch, donor: Program, recipient: Program, kind: str, seed: int,
         remove_index: int | None = None) -> MutationPlan:
    if kind not in STYLES[match.style].allowed_mutators:
        raise NotAllowed(f"mutator {kind} not allowed for style {match.style}")
    rng = random.Random(seed)
    return PLANNERS[kind](match, donor, recipient, rng, seed, remove_index)


def _span_overlaps(span, ranges) -> bool:
    lo, hi = span
    return any(lo <= b and a <= hi for a, b in ranges)


def rebuild_holds(plan_: MutationPlan, new: Program, inserted: list) -> bool:
    """Does the style occur again at the bound context, touching the inserted material?"""
    ctx = plan_.binding.recipient_ctx
    delta = len(new.tree.tokens) - len(plan_.recipient.tree.tokens)
    want = (ctx.ctype, (ctx.token_span[0], ctx.token_span[1] + delta))
    style = STYLES[plan_.match.style]
    for m in scan(style, new.root, new.chains, style.unbounded(), cap=None):
        if (m.ctx.ctype, m.ctx.token_span) != want:
            continue
        if any(_span_overlaps(n.token_span, inserted) for n in m.nodes):
            return True
    return False


def apply(plan_: MutationPlan, verify: bool = True) -> MutatedProgram:
    recipient = plan_.recipient
    text, inserted = render(recipient, plan_.edits)
    provenance = {
        "donor_id": plan_.donor.pid,
        "recipient_id": recipient.pid,
        "style": plan_.match.style,
        "kind": plan_.kind,
        "rng_seed": plan_.seed,
        "match": plan_.match.to_dict(),
        "binding": plan_.binding.describe(),
        "rebind_map": plan_.rebind_map,
        "notes": plan_.notes,
    }
    try:
        new = Program.build(recipient.lang, text, recipient.pid + "+")
    except (ParseError, TokenizeError) as exc:
        log.error("spliced program does not parse (%s): %s", plan_.kind, exc)
        if verify:
            raise SerializationFailure(str(exc)) from None
        return MutatedProgram(text, provenance, False, inserted)
    if verify:
        before = Counter(u.name for u in recipient.chains.unresolved())
        after = Counter(u.name for u in new.chains.unresolved())
        if after - before:
            raise ScopeViolation(f"new unresolved uses: {sorted((after - before).elements())}")
        if plan_.kind in ("Replicate", "Insert") and not rebuild_holds(plan_, new, inserted):
            raise RebuildFailure(f"{plan_.match.style} not found at the bound context")
    return MutatedProgram(text, provenance, True, inserted, new)


def mutate(match: StyleMatch, donor: Program, recipient: Program, kind: str, seed: int,
           verify: bool = True) -> MutatedProgram:
    return apply(plan(match, donor, recipient, kind, seed), verify)
