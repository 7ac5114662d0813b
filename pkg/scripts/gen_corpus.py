#!/usr/bin/env python3
"""Regenerate the shipped mini-C and mini-IR corpora.

Output is deterministic for a given --seed. Every program is parsed with the
shipped grammar and kept under the token limit; donors are built around loop
compositions (adjacent, nested, balanced, runs), seeds mostly keep loops apart.
"""

import argparse
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from stylefuzz.program import Program, load_language  # noqa: E402

MAX_TOKENS = 200


class CGen:
    def __init__(self, rng):
        self.rng = rng
        self.n = 0

    def fresh(self, base):
        self.n += 1
        return f"{base}{self.n}"

    def expr(self, ints, arrs, idx=None):
        r = self.rng
        a = r.choice(ints)
        if idx and arrs and r.random() < 0.6:
            a = f"{r.choice(arrs)}[{idx}]"
        b = r.choice(ints + [str(r.randint(1, 9))])
        return f"{a} {r.choice(['+', '-', '*'])} {b}"

    def simple(self, ints, arrs, idx=None, callee=None):
        r = self.rng
        v = r.choice(ints)
        pick = r.random()
        if callee and pick < 0.25:
            return f"{v} = {callee}({r.choice(ints)}, {r.randint(1, 5)});"
        if pick < 0.6:
            return f"{v} += {self.expr(ints, arrs, idx)};"
        return f"{v} = {self.expr(ints, arrs, idx)};"

    def loop(self, kind, ints, arrs, bound, callee=None, inner=None):
        r = self.rng
        if kind == "for":
            i = self.fresh("i")
            body = [self.simple(ints, arrs, i, callee)]
            if inner:
                body.append(inner)
            elif r.random() < 0.3:
                body.append(self.simple(ints, arrs, i))
            return f"for (int {i} = 0; {i} < {bound}; {i}++) {{ " + " ".join(body) + " }"
        k = r.choice(ints)
        body = [self.simple([v for v in ints if v != k] or ints, arrs, None, callee)]
        if inner:
            body.append(inner)
        return f"while ({k} < {bound}) {{ " + " ".join(body) + f" {k}++; }}"

    def branch(self, ints, arrs, bound, then, other):
        c = self.rng.choice(ints)
        return f"if ({c} > {self.rng.randint(0, 5)}) {{ {then} }} else {{ {other} }}"


def c_program(rng, role, idx):
    g = CGen(rng)
    helper = "int scale(int x, int y) {\n    return x * y + 1;\n}\n\n" if rng.random() < 0.5 else ""
    callee = "scale" if helper else None
    ints = ["acc", "t", "k"]
    arrs = ["a", "b"]
    n = rng.choice([8, 16, 32])
    decls = [f"int a[{n}];", f"int b[{n}];", "int acc = 0;", "int t = 1;", "int k = 0;"]
    stmts = []
    kind = rng.choice(["for", "for", "while"])
    if role == "donor":
        shape = ["cousins", "nesting", "balanced", "sequence", "precedes"][idx % 5]
        if shape == "cousins":
            stmts += [g.loop(kind, ints, arrs, n, callee), g.loop(kind, ints, arrs, n, callee)]
        elif shape == "nesting":
            stmts.append(g.loop("for", ints, arrs, n, callee, inner=g.loop("for", ints, arrs, n)))
        elif shape == "balanced":
            stmts.append(g.branch(ints, arrs, n, g.loop("for", ints, arrs, n), g.loop("for", ints, arrs, n)))
        elif shape == "sequence":
            stmts += [g.loop("for", ints, arrs, n) for _ in range(3)]
        else:
            stmts.append(g.loop("for", ints, arrs, n, callee))
            stmts.append(g.simple(ints, arrs, None, callee))
        if rng.random() < 0.5:
            stmts.insert(0, g.simple(ints, arrs, None, callee))
    else:
        count = rng.choice([1, 1, 2])
        for j in range(count):
            if j:
                stmts.append(g.simple(ints, arrs, None, callee))
            stmts.append(g.loop(rng.choice(["for", "while"]), ints, arrs, n, callee))
        if rng.random() < 0.4:
            stmts.append(g.branch(ints, arrs, n, g.simple(ints, arrs), g.simple(ints, arrs)))
    name = f"{role}_{idx}"
    body = "\n    ".join(decls + stmts + ["return acc + t;"])
    return f"{helper}int {name}(int n) {{\n    {body}\n}}\n"


class IRGen:
    def __init__(self, rng):
        self.rng = rng
        self.n = 0

    def v(self, base="v"):
        self.n += 1
        return f"%{base}{self.n}"

    def body_ops(self, iv, env, count):
        r = self.rng
        ops = []
        last = None
        for _ in range(count):
            choice = r.random()
            if choice < 0.35:
                x = self.v("x")
                ops.append(f"{x} = memref.load %A[{iv}] : f32")
                last = x
            elif choice < 0.7 and last:
                y = self.v("y")
                ops.append(f"{y} = {r.choice(['arith.mulf', 'arith.addf', 'arith.subf'])} {last}, %s : f32")
                last = y
            else:
                ops.append(f"memref.store {last or '%s'}, %B[{iv}] : f32")
        return ops

    def loop(self, env, inner=None, count=2):
        iv = self.v("i")
        ops = self.body_ops(iv, env, count)
        if inner:
            ops.append(inner)
        body = "\n".join("  " + line for op in ops for line in op.split("\n"))
        return f"scf.for {iv} = %c0 to %n step %c1 : index {{\n{body}\n}}"

    def vector(self):
        b = self.v("vb")
        e = self.v("ve")
        red = self.v("vr")
        return [f"{b} = vector.broadcast %s : f32 to vector<4xf32>",
                f"{e} = vector.extract {b}[0] : f32 from vector<4xf32>",
                f"{red} = vector.reduction <add>, {b} : vector<4xf32> into f32"]


def ir_program(rng, role, idx):
    g = IRGen(rng)
    head = [
        "%c0 = arith.constant 0 : index",
        "%c1 = arith.constant 1 : index",
        "%s = arith.constant 2.0 : f32",
    ]
    items = []
    if role == "donor":
        shape = ["cousins", "nesting", "vector", "sequence", "branch", "cousins"][idx % 6]
        if shape == "cousins":
            items += [g.loop({}), g.loop({})]
        elif shape == "nesting":
            items.append(g.loop({}, inner=g.loop({}, count=1), count=1))
        elif shape == "vector":
            items += g.vector()
            items.append(g.loop({}))
        elif shape == "sequence":
            items += [g.loop({}, count=1) for _ in range(3)]
        else:
            c = g.v("cond")
            items.append(f"{c} = arith.cmpf olt, %s, %s : i1")
            items.append(f"scf.if {c} {{\n{indent(g.loop({}, count=1))}\n}} else {{\n{indent(g.loop({}, count=1))}\n}}")
    else:
        items.append(g.loop({}, count=rng.choice([2, 3])))
        if rng.random() < 0.5:
            z = g.v("z")
            items.append(f"{z} = arith.addf %s, %s : f32")
            if rng.random() < 0.5:
                items.append(g.loop({}, count=1))
        if rng.random() < 0.4:
            items += g.vector()[:2]
    ops = head + items + ["return"]
    body = "\n".join(indent(op) for op in ops)
    return (f"func.func @{role}_{idx}(%A: memref<{rng.choice([16, 32])}xf32>, "
            f"%B: memref<16xf32>, %n: index) {{\n{body}\n}}\n")


def indent(text, by="  "):
    return "\n".join(by + line for line in text.split("\n"))


def emit(lang, make, rng, role, count, out_dir, ext):
    out_dir.mkdir(parents=True, exist_ok=True)
    for old in out_dir.glob(f"*{ext}"):
        old.unlink()
    made = 0
    tries = 0
    while made < count:
        tries += 1
        if tries > count * 50:
            raise SystemExit(f"could not generate {count} {role} programs for {lang.name}")
        text = make(rng, role, made)
        prog = Program.build(lang, text, role)
        if len(prog.tokens) > MAX_TOKENS or prog.chains.unresolved():
            continue
        (out_dir / f"{role}_{made:02d}{ext}").write_text(text, encoding="utf-8")
        made += 1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=ROOT / "src" / "stylefuzz" / "data" / "corpus")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    c = load_language("mini-c")
    ir = load_language("mini-ir")
    emit(c, c_program, rng, "donor", 10, args.out / "mini-c" / "donors", ".c")
    emit(c, c_program, rng, "seed", 20, args.out / "mini-c" / "seeds", ".c")
    emit(ir, ir_program, rng, "donor", 6, args.out / "mini-ir" / "donors", ".mlir")
    emit(ir, ir_program, rng, "seed", 10, args.out / "mini-ir" / "seeds", ".mlir")


if __name__ == "__main__":
    main()
