#!/usr/bin/env python3
"""Writes the expected outputs for every fixture sentence.

For a fixture named NAME (its "# fixture = NAME" comment) this produces
data/fixtures/golden/NAME.dag and NAME.roundtrip.conllu. The conversion is
written from the format description alone and shares no code with the
C++ library, so the test suite can compare the two.

  .dag               debug DAG block (see docs/formats.md)
  .roundtrip.conllu  input with subtypes stripped, null rows dropped and
                     DEPS = basic dependency + retained enhanced ones
"""
import argparse
import collections
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent


def blocks(path):
    text = path.read_text(encoding="utf-8")
    return [b.split("\n") for b in text.strip("\n").split("\n\n") if b.strip()]


def strip(rel):
    return rel.split(":", 1)[0]


class Sentence:
    def __init__(self, lines):
        self.comments = [l for l in lines if l.startswith("#")]
        self.rows = [l.split("\t") for l in lines if not l.startswith("#")]
        self.words = [r for r in self.rows if r[0].isdigit()]
        self.name = next(c.split("=", 1)[1].strip() for c in self.comments if c.startswith("# fixture ="))

    def enhanced(self, w):
        """(head, relation) pairs kept as remote edges, sorted."""
        idx, head, rel = int(w[0]), int(w[6]), strip(w[7])
        out = set()
        if w[8] == "_":
            return []
        for item in w[8].split("|"):
            h, r = item.split(":", 1)
            if "." in h:
                continue
            h, r = int(h), strip(r)
            if h == idx or (h == head and r == rel) or (h == 0 and r != "root"):
                continue
            out.add((h, r))
        return sorted(out)


def convert(s):
    n = len(s.words)
    deps = collections.defaultdict(list)
    root_tok = None
    for w in s.words:
        if w[6] == "0":
            root_tok = int(w[0])
        else:
            deps[int(w[6])].append(int(w[0]))
    enh = {int(w[0]): s.enhanced(w) for w in s.words}
    needs = {root_tok} | {h for h in deps if deps[h]} | {h for e in enh.values() for h, _ in e if h > 0}

    nodes = [("root", "0", None)] + [("terminal", str(i), i) for i in range(1, n + 1)]
    nt = {root_tok: 0}
    order, queue = [], collections.deque([root_tok])
    while queue:
        h = queue.popleft()
        order.append(h)
        for d in deps[h]:
            if d in needs:
                nt[d] = len(nodes)
                nodes.append(("nonterminal", str(d), None))
            queue.append(d)

    def unit(t):
        return nt.get(t, t)

    edges = []
    for h in order:
        if h not in nt:
            continue
        edges.append((nt[h], h, "head", False))
        for d in deps[h]:
            edges.append((nt[h], unit(d), strip(s.words[d - 1][7]), False))

    def path(a, b):
        seen, stack = {a}, [a]
        while stack:
            u = stack.pop()
            if u == b:
                return True
            for p, c, _, _ in edges:
                if p == u and c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    for d in range(1, n + 1):
        for h, r in enh[d]:
            src = 0 if h == 0 else nt[h]
            tgt = unit(d)
            if tgt == 0 or path(tgt, src):
                tgt = d
            if (src, tgt, r, True) not in edges:
                edges.append((src, tgt, r, True))
    return nodes, edges


def dag_block(s):
    nodes, edges = convert(s)
    out = [f"comment\t{c}" for c in s.comments]
    out += ["token\t" + "\t".join(r) for r in s.rows if "." not in r[0]]
    for i, (kind, swap, pos) in enumerate(nodes):
        out.append(f"node\t{i}\t{kind}\t{swap}" + (f"\t{pos}" if pos is not None else ""))
    for p, c, label, remote in edges:
        out.append(f"edge\t{p}\t{c}\t{label}\t{'remote' if remote else 'primary'}")
    return "\n".join(out) + "\n\n"


def roundtrip_block(s):
    out = list(s.comments)
    for r in s.rows:
        if "." in r[0]:
            continue
        if "-" in r[0]:
            out.append("\t".join(r))
            continue
        r = list(r)
        r[7] = strip(r[7])
        pairs = {(int(r[6]), r[7])} | set(s.enhanced(r))
        r[8] = "|".join(f"{h}:{rel}" for h, rel in sorted(pairs))
        out.append("\t".join(r))
    return "\n".join(out) + "\n\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixtures", default=ROOT / "data/fixtures/fixtures.conllu", type=pathlib.Path)
    ap.add_argument("--out", default=ROOT / "data/fixtures/golden", type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for b in blocks(args.fixtures):
        s = Sentence(b)
        (args.out / f"{s.name}.dag").write_text(dag_block(s), encoding="utf-8")
        (args.out / f"{s.name}.roundtrip.conllu").write_text(roundtrip_block(s), encoding="utf-8")


if __name__ == "__main__":
    main()
