#!/usr/bin/env python3
"""Builds data/fixtures/memorization.conllu: every fixture sentence plus
lexical variants of the first ones, up to 50 sentences.

A variant swaps the forms and lemmas of nouns, proper nouns and adjectives
outside multiword tokens for other words of the same class, so trees and
labels are unchanged. Output is deterministic.
"""
import argparse
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent

NOUNS_SG = [("table", "table"), ("river", "river"), ("letter", "letter"), ("garden", "garden"),
            ("window", "window"), ("teacher", "teacher"), ("song", "song"), ("bridge", "bridge")]
NOUNS_PL = [("tables", "table"), ("rivers", "river"), ("letters", "letter"), ("gardens", "garden"),
            ("windows", "window"), ("teachers", "teacher"), ("songs", "song"), ("bridges", "bridge")]
PROPN = [("Lena", "Lena"), ("Omar", "Omar"), ("Berlin", "Berlin"), ("Tomas", "Tomas"), ("Ines", "Ines")]
ADJ = [("quiet", "quiet"), ("bright", "bright"), ("old", "old"), ("green", "green"), ("calm", "calm")]

TARGET = 50


def read_blocks(path):
    text = path.read_text(encoding="utf-8")
    return [b.split("\n") for b in text.strip("\n").split("\n\n") if b.strip()]


def mwt_members(lines):
    covered = set()
    for line in lines:
        if line.startswith("#"):
            continue
        first = line.split("\t", 1)[0]
        if "-" in first:
            lo, hi = first.split("-")
            covered.update(str(i) for i in range(int(lo), int(hi) + 1))
    return covered


def pick(upos, feats, k):
    if upos == "NOUN":
        pool = NOUNS_PL if "Number=Plur" in feats else NOUNS_SG
    elif upos == "PROPN":
        pool = PROPN
    elif upos == "ADJ":
        pool = ADJ
    else:
        return None
    return pool[k % len(pool)]


def variant(lines, serial):
    covered = mwt_members(lines)
    out, changed, k = [], 0, serial
    for line in lines:
        if line.startswith("#"):
            out.append(line)
            continue
        cols = line.split("\t")
        if "-" in cols[0] or "." in cols[0] or cols[0] in covered:
            out.append(line)
            continue
        repl = pick(cols[3], cols[5], k)
        if repl is not None and repl[0] != cols[1]:
            form, lemma = repl
            if cols[0] == "1":
                form = form[:1].upper() + form[1:]
            cols[1], cols[2] = form, lemma
            changed += 1
            k += 1
        out.append("\t".join(cols))
    if not changed:
        return None
    return rewrite_comments(out, serial)


def surface(lines):
    covered = mwt_members(lines)
    parts = []
    for line in lines:
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if "." in cols[0] or cols[0] in covered:
            continue
        parts.append(cols[1])
        if "SpaceAfter=No" not in cols[9].split("|"):
            parts.append(" ")
    return "".join(parts).rstrip(" ")


def rewrite_comments(lines, serial):
    text = surface(lines)
    out = []
    for line in lines:
        if line.startswith("# sent_id = "):
            out.append(f"{line}-v{serial}")
        elif line.startswith("# text = "):
            out.append(f"# text = {text}")
        else:
            out.append(line)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixtures", default=ROOT / "data/fixtures/fixtures.conllu", type=pathlib.Path)
    ap.add_argument("--out", default=ROOT / "data/fixtures/memorization.conllu", type=pathlib.Path)
    args = ap.parse_args()
    blocks = read_blocks(args.fixtures)
    corpus = list(blocks)
    serial = 1
    while len(corpus) < TARGET:
        added = False
        for b in blocks:
            if len(corpus) >= TARGET:
                break
            v = variant(b, serial)
            if v is not None:
                corpus.append(v)
                serial += 1
                added = True
        if not added:
            raise SystemExit("no fixture admits a lexical variant")
    args.out.write_text("\n\n".join("\n".join(b) for b in corpus) + "\n\n", encoding="utf-8")


if __name__ == "__main__":
    main()
