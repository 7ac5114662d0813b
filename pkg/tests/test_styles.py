import pytest

from stylefuzz.constructs import contains
from stylefuzz.styles import (CATEGORY, STYLES, MatchPool, admissible_pairs, extract_pool, scan,
                              types_of)

import oracle
import support

PROGRAMS = support.programs()
IDS = [p.pid for p in PROGRAMS]


def keys(matches):
    return [m.key() for m in matches]


def leaves(node):
    return " ".join(l.token.text for l in node.parse_ref.leaves())


class TestTable:
    def test_mutators_per_style(self):
        assert set(STYLES["Precedes"].allowed_mutators) == {"Move", "Insert", "Replace"}
        assert set(STYLES["Sequence"].allowed_mutators) == {"Replicate", "Insert", "Replace"}
        assert set(STYLES["Exists"].allowed_mutators) == {"Insert", "Replace"}
        for name in ("Cousins", "Nesting", "Balanced"):
            assert set(STYLES[name].allowed_mutators) == {"Replicate", "Move", "Insert", "Replace"}

    def test_replicate_needs_same_type(self):
        for s in STYLES.values():
            if "Replicate" in s.allowed_mutators:
                assert s.same_type_required

    def test_admissible_pair_count(self):
        # 4 + 4 + 3 + 4 + 3 + 2
        assert len(admissible_pairs()) == 20

    def test_unknown_bound(self):
        with pytest.raises(KeyError):
            STYLES["Cousins"].bounds({"q": 1})

    def test_categories_bound_in_both_languages(self):
        for lang in ("mini-c", "mini-ir"):
            ann = support.programs(lang)[0].lang.ann
            for cat in ("Loop", "FuncCall", "Arithmetic", "If-Else", "Func", "Program"):
                assert types_of([cat], ann), (lang, cat)


class TestPaperExamples:
    def test_cousins_example(self):
        p = support.sample("cousins.c")
        ms = scan("Cousins", p.root, p.chains, {"k": 0, "d": 0})
        assert len(ms) == 1
        a, b = ms[0].nodes
        assert a.ctype == b.ctype == "FOR_STMT_"
        assert leaves(a).startswith("for ( int i") and leaves(b).startswith("for ( int j")
        assert ms[0].ctx.ctype == "FUNC_"
        assert ms[0].predicate_values == {"k": 0, "d": 0}

    def test_nesting_context_is_outer_loop(self):
        p = support.sample("nesting.c")
        ms = scan("Nesting", p.root, p.chains)
        assert len(ms) == 1
        outer, inner = ms[0].nodes
        assert inner.parent is outer
        assert ms[0].ctx is outer
        assert ms[0].predicate_values == {"d": 1}

    def test_balanced_example(self):
        p = support.sample("balanced.c")
        ms = scan("Balanced", p.root, p.chains)
        assert len(ms) == 1
        top, x, y = ms[0].nodes
        assert top.ctype == "IF_ELSE_"
        assert (leaves(x), leaves(y)) == ("a + 10 % c", "b - 5 % c")
        assert ms[0].predicate_values == {"d": 1}

    def test_exists_example(self):
        p = support.sample("exists.c")
        found = {leaves(m.nodes[0]): m.ctx.ctype for m in scan("Exists", p.root, p.chains, {"l": 1})}
        assert found["0xff00ff"] == "FUNC_"
        assert found["popcount ( c )"] == "IF_ELSE_"

    def test_single_loop_has_no_cousins(self):
        p = support.build_text("int f(int n) { int s = 0; for (int i = 0; i < n; i++) { s += i; } return s; }")
        assert [m for m in scan("Cousins", p.root, p.chains) if m.nodes[0].ctype == "FOR_STMT_"] == []

    def test_loop_fusion_pool_has_the_loop_pair(self):
        p = support.sample("loop_fusion.c")
        pool = extract_pool([(p.pid, p.root, p.chains)], ["Cousins"])
        loops = [m for m in pool.matches("Cousins") if m.signature() == ("FOR_STMT_", "FOR_STMT_")]
        assert len(loops) == 1 and loops[0].donor_id == p.pid


class TestOracle:
    @pytest.mark.parametrize("style", list(STYLES))
    @pytest.mark.parametrize("prog", PROGRAMS, ids=IDS)
    def test_default_bounds(self, prog, style):
        assert keys(scan(style, prog.root, prog.chains)) == oracle.brute(style, prog)

    @pytest.mark.parametrize("style,bounds", [
        ("Cousins", {"k": None, "d": None}),
        ("Cousins", {"k": 1, "d": 3}),
        ("Nesting", {"d": None}),
        ("Balanced", {"d": None}),
        ("Sequence", {"l": 3}),
        ("Exists", {"l": 5}),
    ])
    @pytest.mark.parametrize("prog", PROGRAMS[::2], ids=IDS[::2])
    def test_other_bounds_uncapped(self, prog, style, bounds):
        got = keys(scan(style, prog.root, prog.chains, bounds, cap=None))
        assert got == oracle.brute(style, prog, bounds, cap=None)

    def test_empty_pool(self):
        assert len(extract_pool([])) == 0

    def test_pool_size_is_sum_of_oracle_counts(self):
        corpus = [(p.pid, p.root, p.chains) for p in PROGRAMS]
        pool = extract_pool(corpus)
        assert len(pool) == sum(len(oracle.brute(s, p)) for p in PROGRAMS for s in STYLES)
        for (style, sig), ms in pool.groups.items():
            assert all(m.style == style and m.signature() == sig for m in ms)


def _validate(m, prog):
    """Independent check of the match invariants."""
    st = STYLES[m.style]
    ann = prog.lang.ann
    ctx_types = types_of(st.ctx_types, ann)
    assert m.ctx.ctype in ctx_types
    for i, n in enumerate(m.nodes):
        cats = st.admissible_types[min(i, len(st.admissible_types) - 1)]
        assert n.ctype in types_of(cats, ann)
        assert n.is_descendant_of(m.ctx)
    if st.same_type_required:
        same = m.nodes[1:] if m.style == "Balanced" else m.nodes
        assert len({n.ctype for n in same}) == 1
    assert contains(m.ctx, m.nodes, prog.chains)
    # nothing lower on the path qualifies
    lowest = m.nodes[0].parent if len(m.nodes) == 1 else None
    if lowest is None:
        paths = [[n] + list(n.ancestors()) for n in m.nodes]
        lowest = next(a for a in paths[0] if all(any(a is b for b in p) for p in paths[1:]))
    node = lowest
    while node is not m.ctx:
        assert not (node.ctype in ctx_types and contains(node, m.nodes, prog.chains))
        node = node.parent
    bounds = st.bounds()
    for name, _, sense in st.predicate_params:
        v, b = m.predicate_values[name], bounds[name]
        assert v <= b if sense == "max" else v >= b


@pytest.mark.parametrize("prog", PROGRAMS, ids=IDS)
def test_soundness(prog):
    for s in STYLES:
        for m in scan(s, prog.root, prog.chains):
            _validate(m, prog)


@pytest.mark.parametrize("prog", PROGRAMS[::3], ids=IDS[::3])
def test_loosening_bounds_never_removes(prog):
    def core(ms):
        return {k[:3] for k in keys(ms)}

    for style, tight, loose in [("Cousins", {"k": 0, "d": 0}, {"k": 2, "d": 8}),
                                ("Nesting", {"d": 1}, {"d": 3}),
                                ("Balanced", {"d": 1}, {"d": 4}),
                                ("Sequence", {"l": 3}, {"l": 2}),
                                ("Exists", {"l": 4}, {"l": 1})]:
        a = core(scan(style, prog.root, prog.chains, tight, cap=None))
        b = core(scan(style, prog.root, prog.chains, loose, cap=None))
        assert a <= b, style


def test_cap_keeps_first_in_scan_order():
    prog = max(PROGRAMS, key=lambda p: len(p.tokens))
    full = scan("Precedes", prog.root, prog.chains, cap=None)
    assert len(full) > 64
    capped = scan("Precedes", prog.root, prog.chains)
    assert keys(capped) == keys(full[:64])
    assert [m.order_key() for m in full] == sorted(m.order_key() for m in full)


def test_to_dict_round_trips_json():
    import json
    p = support.sample("cousins.c")
    m = scan("Cousins", p.root, p.chains, donor_id="cousins")[0]
    d = json.loads(json.dumps(m.to_dict()))
    assert d["style"] == "Cousins" and d["donor_id"] == "cousins"
    assert d["ctx"]["ctype"] == "FUNC_"
    assert d["predicates"] == {"k": 0, "d": 0}
    assert [n["span"] for n in d["nodes"]] == [list(n.token_span) for n in m.nodes]


def test_pool_is_read_only():
    p = support.sample("loop_fusion.c")
    pool = extract_pool([(p.pid, p.root, p.chains)])
    groups = pool.groups
    groups.clear()
    assert len(pool.groups) > 0
    assert isinstance(pool.matches(), tuple)
    assert isinstance(MatchPool(), MatchPool)


def test_category_names_cover_table():
    assert set(CATEGORY) >= {"Loop", "FuncCall", "Arithmetic", "Logical", "If-Else", "MemRef", "Vector",
                             "Func", "Program"}
