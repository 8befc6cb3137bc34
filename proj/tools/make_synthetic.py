#!/usr/bin/env python3
"""Generates the bundled synthetic treebanks.

memorize.trees   50 sentences, lengths 3-12, for the memorization run.
skewed_*.trees   train/dev/bench split whose label order distribution is
                 skewed: WHNP and WHADVP occur only as left children, ADVP and
                 VP (almost) only as right children. WHNP and NP, and WHADVP
                 and ADVP, share their words, so the label of such a phrase is
                 decided by its position and its parent rule, not its content.

Usage: make_synthetic.py OUT_DIR [--seed N]
"""

import argparse
import os
import random

WORDS = {
    "D": ["the", "a", "every", "some"],
    "N": ["dog", "cat", "man", "park", "idea", "song"],
    "V": ["saw", "liked", "heard", "made"],
    "VI": ["slept", "left", "sang"],
    "P": ["in", "on", "with", "near"],
    "A": ["big", "old", "red"],
    "R": ["here", "there", "now", "often"],
    "Q": ["two", "three", "many"],
    "C": ["that", "because"],
}


class Gen:
    def __init__(self, rng, depth_limit):
        self.rng = rng
        self.depth_limit = depth_limit

    def word(self, tag):
        return f"({tag} {self.rng.choice(WORDS[tag])})"

    def node(self, label, kids):
        return f"({label} {' '.join(kids)})"

    def np_content(self, depth):
        r = self.rng.random()
        if r < 0.45:
            return [self.word("D"), self.word("N")]
        if r < 0.6:
            return [self.word("D"), self.adjp(depth), self.word("N")]
        if r < 0.72:
            return [self.qp(depth), self.word("N")]
        if r < 0.85 and depth < self.depth_limit:
            return [self.np(depth + 1), self.pp(depth + 1)]
        return [self.word("N")]

    def np(self, depth):
        return self.node("NP", self.np_content(depth))

    def whnp(self, depth):
        # same words as a simple NP; only the parent and position tell them apart
        kids = [self.word("D"), self.word("N")] if self.rng.random() < 0.7 else [self.word("N")]
        return self.node("WHNP", kids)

    def adjp(self, depth):
        if self.rng.random() < 0.3:
            return self.node("ADJP", [self.word("R"), self.word("A")])
        return self.node("ADJP", [self.word("A")])

    def qp(self, depth):
        if self.rng.random() < 0.3:
            return self.node("QP", [self.word("R"), self.word("Q")])
        return self.node("QP", [self.word("Q")])

    def advp(self):
        return self.node("ADVP", [self.word("R")])

    def whadvp(self):
        return self.node("WHADVP", [self.word("R")])

    def pp(self, depth):
        return self.node("PP", [self.word("P"), self.np(depth + 1)])

    def vp(self, depth):
        r = self.rng.random()
        if r < 0.25:
            kids = [self.word("VI")]
        elif r < 0.55:
            kids = [self.word("V"), self.np(depth + 1)]
        elif r < 0.7:
            kids = [self.word("VI"), self.advp()]
        elif r < 0.85 and depth < self.depth_limit:
            kids = [self.word("V"), self.np(depth + 1), self.pp(depth + 1)]
        elif depth < self.depth_limit:
            kids = [self.word("V"), self.sbar(depth + 1)]
        else:
            kids = [self.word("V"), self.np(depth + 1)]
        return self.node("VP", kids)

    def sbar(self, depth):
        r = self.rng.random()
        if r < 0.4:
            return self.node("SBAR", [self.whnp(depth), self.node("S", [self.vp(depth + 1)])])
        if r < 0.7:
            return self.node("SBAR", [self.whadvp(), self.s(depth + 1)])
        return self.node("SBAR", [self.word("C"), self.s(depth + 1)])

    def s(self, depth):
        return self.node("S", [self.np(depth + 1), self.vp(depth + 1)])

    def sentence(self):
        return f"(TOP {self.s(0)})"


def length(tree):
    # words are the tokens right before a closing bracket that are not brackets
    return sum(1 for tok in tree.replace(")", " ) ").split() if tok not in {")"} and not tok.startswith("("))


def sample(rng, count, lo, hi, depth_limit, seen=None):
    gen = Gen(rng, depth_limit)
    out = []
    seen = set() if seen is None else seen
    while len(out) < count:
        t = gen.sentence()
        if lo <= length(t) <= hi and t not in seen:
            seen.add(t)
            out.append(t)
    return out


def write(path, trees):
    with open(path, "w") as f:
        for t in trees:
            f.write(t + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    rng = random.Random(args.seed)
    write(os.path.join(args.out_dir, "memorize.trees"), sample(rng, 50, 3, 12, 3))

    rng = random.Random(args.seed + 1)
    seen = set()
    write(os.path.join(args.out_dir, "skewed_train.trees"), sample(rng, 200, 3, 14, 4, seen))
    write(os.path.join(args.out_dir, "skewed_dev.trees"), sample(rng, 100, 3, 14, 4, seen))
    write(os.path.join(args.out_dir, "skewed_bench.trees"), sample(rng, 100, 8, 16, 5, seen))


if __name__ == "__main__":
    main()
