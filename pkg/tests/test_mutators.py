import random
from collections import Counter

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from stylefuzz.constructs import ContractError
from stylefuzz.mutators import (REJECT_REASONS, NoCandidateContext, NotAllowed, RebindFailure, Rejected,
                                apply, klr_labels, levenshtein, match_context, mutate, partialize, plan,
                                plan_move, structural_similarity, token_text)
from stylefuzz.styles import STYLES, extract_pool, scan

import support

bt = support.build_text


def of_type(root, *ctypes):
    return [n for n in root.preorder() if n.ctype in ctypes]


def loop_sum():
    d, r = support.sample("loop_sum_donor.c"), support.sample("loop_sum_recipient.c")
    return d, r, scan("Cousins", d.root, d.chains)[0]


class TestPartialize:
    def test_loop_sum_remove_second_loop(self):
        d, _, m = loop_sum()
        l1, l2 = m.nodes
        pc = partialize(m, 1)
        assert pc.removed is l2 and pc.anchors == (l1,)
        parent, ordinal = pc.hole
        assert parent is m.ctx
        assert parent.children[ordinal] is l2
        assert parent.children.index(l1) < ordinal
        assert pc.template_ctx is m.ctx

    def test_sequence_middle(self):
        p = bt("int f(int n) {\n  int s = 0;\n  for (int i = 0; i < n; i++) { s += i; }\n"
               "  for (int j = 0; j < n; j++) { s -= j; }\n  for (int k = 0; k < n; k++) { s *= k; }\n"
               "  return s;\n}\n")
        m = next(m for m in scan("Sequence", p.root, p.chains) if m.nodes[0].ctype == "FOR_STMT_")
        assert len(m.nodes) == 3
        pc = partialize(m, 1)
        assert pc.anchors == (m.nodes[0], m.nodes[2])
        parent, ordinal = pc.hole
        kids = parent.children
        assert kids.index(m.nodes[0]) < ordinal < kids.index(m.nodes[2])

    def test_exists_refused(self):
        p = support.sample("exists.c")
        m = scan("Exists", p.root, p.chains)[0]
        with pytest.raises(ContractError, match="requires k >= 2"):
            partialize(m)

    def test_random_choice_is_seeded(self):
        _, _, m = loop_sum()
        picks = {partialize(m, rng=random.Random(s)).removed_index for s in range(20)}
        assert picks == {0, 1}
        assert partialize(m, rng=random.Random(3)) == partialize(m, rng=random.Random(3))

    def test_nesting_keeps_outer(self):
        p = support.sample("nesting.c")
        m = scan("Nesting", p.root, p.chains)[0]
        assert partialize(m, rng=random.Random(0)).removed_index == 1
        with pytest.raises(ContractError):
            partialize(m, 0)


TWO_FUNCS = """int f(int n) {
    int s = 0;
    for (int i = 0; i < n; i++) {
        s += i;
    }
    return s;
}

int g(int n) {
    int s = 0;
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            s += j;
        }
    }
    return s;
}
"""


class TestSimilarity:
    def test_identical(self):
        p = support.sample("loop_fusion.c")
        for n in p.root.preorder():
            assert structural_similarity(n, n) == 1.0

    def test_func_under_program(self):
        a = bt("int f(int n) { return n; }")
        b = bt("int g(int m) { return m + 1; }")
        assert structural_similarity(of_type(a.root, "FUNC_")[0], of_type(b.root, "FUNC_")[0]) == 1.0

    def test_loop_under_func_vs_loop_under_loop(self):
        p = bt(TWO_FUNCS)
        flat, outer, inner = of_type(p.root, "FOR_STMT_")
        # labels worked out by hand: own, two ancestors, nearest non-role left and right sibling
        assert klr_labels(flat) == ["FOR_STMT_", "FUNC_", "PROGRAM_", "ARITH_EXPR_", ">"]
        assert klr_labels(inner) == ["FOR_STMT_", "FOR_STMT_", "FUNC_", "LOGICAL_EXPR_", ">"]
        assert structural_similarity(flat, inner) == pytest.approx(2 / 5)
        assert structural_similarity(inner, flat) == pytest.approx(2 / 5)

    def test_root_padding(self):
        p = bt("int f(int n) { return n; }")
        assert klr_labels(p.root) == ["PROGRAM_", "^", "^", "<", ">"]

    @pytest.mark.parametrize("name", ["loop_fusion.c", "loop_sum_donor.c", "vector_recipient.mlir"])
    def test_symmetric_and_bounded(self, name):
        p = support.sample(name)
        nodes = list(p.root.preorder())[:25]
        for a in nodes:
            for b in nodes:
                s = structural_similarity(a, b)
                assert 0.0 <= s <= 1.0
                assert s == structural_similarity(b, a)

    @given(st.text("abc ", max_size=12), st.text("abc ", max_size=12))
    def test_levenshtein_against_recursive_definition(self, a, b):
        from functools import lru_cache

        @lru_cache(maxsize=None)
        def d(i, j):
            if i == 0 or j == 0:
                return i + j
            return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

        assert levenshtein(a, b) == d(len(a), len(b))


class TestContext:
    def test_loop_sum_binding(self):
        d, r, m = loop_sum()
        b = match_context(r, m, partialize(m, 1))
        assert b.recipient_ctx.ctype == "FUNC_"
        (donor_l1, rec_l1), = b.anchor_map
        assert donor_l1 is m.nodes[0]
        assert rec_l1 is of_type(r.root, "FOR_STMT_")[0]
        # the hole sits right after the recipient loop
        assert b.location.boundary == rec_l1.token_span[1] + 1

    def test_no_candidate_context(self):
        _, _, m = loop_sum()
        r = bt("int x = 1;\n")
        with pytest.raises(NoCandidateContext):
            match_context(r, m, partialize(m, 1))

    def test_prefers_func_with_loop(self):
        _, _, m = loop_sum()
        r = bt("int a(int n) {\n    return n;\n}\n\n"
               "float b(float data[], int n) {\n    float s1 = 0;\n    float s2 = 0;\n"
               "    for (int i = 0; i < n; i++) {\n        s1 += data[i];\n    }\n    return s1;\n}\n")
        a_func, b_func = of_type(r.root, "FUNC_")
        # equal similarity; anchor admissibility decides
        assert structural_similarity(m.ctx, a_func) == structural_similarity(m.ctx, b_func)
        assert match_context(r, m, partialize(m, 1)).recipient_ctx is b_func


class TestWorkedExamples:
    def test_loop_sum_replicate(self):
        d, r, m = loop_sum()
        out = mutate(m, d, r, "Replicate", seed=0)
        loops = of_type(out.program.root, "FOR_STMT_")
        assert len(loops) == 2
        assert loops[0].token_span[1] + 1 == loops[1].token_span[0]
        assert "sum1 += data[i];" in out.text and "sum2 += data[i];" in out.text
        assert out.provenance["rebind_map"] == [{"use": "sum1", "to": "sum2", "type": "float", "count": 1}]
        # loop-local i is not rebound
        assert all(e["use"] != "i" for e in out.provenance["rebind_map"])

    def test_vector_insert(self):
        d, r = support.sample("vector_donor.mlir"), support.sample("vector_recipient.mlir")
        m = next(m for m in scan("Exists", d.root, d.chains) if m.nodes[0].ctype == "VEC_EXTRACT_")
        out = mutate(m, d, r, "Insert", seed=0)
        assert "vector.extract %cst[0]" in out.text
        assert {"use": "%v", "to": "%cst"}.items() <= out.provenance["rebind_map"][0].items()
        assert out.program.chains.unresolved() == []

    def test_rebind_failure_on_type(self):
        d = bt("float compute(float x) {\n    float t = 0;\n    for (int i = 0; i < 4; i++) {\n"
               "        t += x;\n    }\n    return t;\n}\n")
        r = bt("int r(int n) {\n    int s = 0;\n    for (int i = 0; i < n; i++) {\n        s += i;\n"
               "    }\n    return s;\n}\n")
        m = next(m for m in scan("Exists", d.root, d.chains) if m.nodes[0].ctype == "FOR_STMT_")
        with pytest.raises(RebindFailure):
            mutate(m, d, r, "Insert", seed=0)

    def test_int_widens_to_float(self):
        # the reverse direction is allowed by the typecompat table
        d = bt("int compute(int x) {\n    int t = 0;\n    for (int i = 0; i < 4; i++) {\n"
               "        t += x;\n    }\n    return t;\n}\n")
        r = bt("float r(float n) {\n    float s = 0;\n    for (int i = 0; i < 3; i++) {\n        s += n;\n"
               "    }\n    return s;\n}\n")
        m = next(m for m in scan("Exists", d.root, d.chains) if m.nodes[0].ctype == "FOR_STMT_")
        out = mutate(m, d, r, "Insert", seed=0)
        assert len(of_type(out.program.root, "FOR_STMT_")) == 2

    def test_replace_with_identical_subtree_is_identity(self):
        r = support.sample("loop_sum_recipient.c")
        for m in scan("Exists", r.root, r.chains):
            out = mutate(m, r, r, "Replace", seed=0)
            assert out.program.tree.shape() == r.tree.shape()

    def test_move_unique_call(self):
        d = bt("int g(int v) {\n    return v;\n}\n\nint f(int a) {\n    int x = 0;\n    x = g(a);\n"
               "    x = x + 1;\n    return x;\n}\n")
        r = bt("int g(int v) {\n    return v;\n}\n\nint h(int b) {\n    int y = 0;\n    y = y * 2;\n"
               "    y = y - 3;\n    b = g(b);\n    return b;\n}\n")
        m = next(m for m in scan("Precedes", d.root, d.chains)
                 if [n.ctype for n in m.nodes] == ["FUNC_CALL_", "ARITH_EXPR_"])
        p = plan_move(m, d, r, random.Random(0), 0, i=0)
        out = apply(p)
        before = [n.ctype for n in r.root.preorder()]
        after = [n.ctype for n in out.program.root.preorder()]
        assert Counter(before) == Counter(after)
        assert out.text.count("b = g(b);") == 1
        expected = bt("int g(int v) {\n    return v;\n}\n\nint h(int b) {\n    b = g(b);\n    int y = 0;\n"
                      "    y = y * 2;\n    y = y - 3;\n    return b;\n}\n")
        assert [(n.ctype, n.token_span) for n in out.program.root.preorder()] == \
            [(n.ctype, n.token_span) for n in expected.root.preorder()]
        assert before != after


class TestContract:
    def test_not_allowed(self):
        p = support.sample("exists.c")
        m = scan("Exists", p.root, p.chains)[0]
        with pytest.raises(NotAllowed):
            plan(m, p, p, "Move", 0)

    def test_reject_reasons_enumerated(self):
        def subclasses(c):
            for s in c.__subclasses__():
                yield s
                yield from subclasses(s)

        reasons = {c.reason for c in subclasses(Rejected)}
        assert reasons == set(REJECT_REASONS)
        assert {"NoCandidateContext", "NoAnchorMatch", "RebindFailure", "MoveNoCandidate",
                "SerializationFailure"} <= reasons

    def test_deterministic(self):
        d, r, m = loop_sum()
        a = mutate(m, d, r, "Replicate", seed=11)
        b = mutate(m, d, r, "Replicate", seed=11)
        assert a.text == b.text and a.provenance == b.provenance

    def test_provenance_fields(self):
        d, r, m = loop_sum()
        prov = mutate(m, d, r, "Replicate", seed=2).provenance
        assert {"donor_id", "recipient_id", "style", "kind", "rng_seed"} <= set(prov)
        assert (prov["donor_id"], prov["recipient_id"]) == ("loop_sum_donor.c", "loop_sum_recipient.c")
        assert (prov["style"], prov["kind"], prov["rng_seed"]) == ("Cousins", "Replicate", 2)


def _pool(lang):
    donors = support.corpus(lang, "donors")
    pool = extract_pool([(p.pid, p.root, p.chains) for p in donors])
    by_id = {p.pid: p for p in donors}
    return [m for m in pool.matches()], by_id


POOLS = {lang: _pool(lang) for lang in ("mini-c", "mini-ir")}


@settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(lang=st.sampled_from(["mini-c", "mini-ir"]), pick=st.integers(0, 10 ** 6),
       rec=st.integers(0, 100), kind=st.sampled_from(["Replicate", "Move", "Insert", "Replace"]),
       seed=st.integers(0, 2 ** 16))
def test_edit_properties(lang, pick, rec, kind, seed):
    matches, by_id = POOLS[lang]
    m = matches[pick % len(matches)]
    if kind not in STYLES[m.style].allowed_mutators:
        return
    seeds = support.corpus(lang, "seeds")
    r = seeds[rec % len(seeds)]
    try:
        out = mutate(m, by_id[m.donor_id], r, kind, seed)
    except Rejected as exc:
        assert exc.reason in REJECT_REASONS and exc.reason != "SerializationFailure"
        return
    new = out.program
    assert out.reparse_ok and new is not None
    # no new unresolved names
    assert not (Counter(u.name for u in new.chains.unresolved()) -
                Counter(u.name for u in r.chains.unresolved()))
    # same result again
    assert mutate(m, by_id[m.donor_id], r, kind, seed).text == out.text
    if kind == "Move":
        return  # the moved node may come from anywhere in the recipient
    # locality: text outside the recipient context is untouched
    ctx = plan(m, by_id[m.donor_id], r, kind, seed).binding.recipient_ctx
    lo, hi = ctx.token_span
    src = r.source
    head = src[:r.tokens[lo].start]
    tail = src[r.tokens[hi].end:]
    assert out.text.startswith(head) and out.text.endswith(tail)
    if kind in ("Replicate", "Insert"):
        kept = [t.text for j, t in enumerate(new.tokens) if not any(a <= j <= b for a, b in out.inserted)]
        assert kept == [t.text for t in r.tokens]


def test_material_without_uses_has_empty_rebind_map():
    d = bt("int f() {\n    int s = 0;\n    s = 1 + 2;\n    return s;\n}\n")
    r = bt("int g(int n) {\n    int t = n * 3;\n    return t;\n}\n")
    m = next(m for m in scan("Exists", d.root, d.chains) if token_text(m.nodes[0].parse_ref) == "1 + 2")
    out = mutate(m, d, r, "Replace", seed=0)
    assert out.provenance["rebind_map"] == []
    assert "1 + 2" in out.text
