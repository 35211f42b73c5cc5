#!/usr/bin/env python3
"""Writes the toy evaluation fixture and its brute-force expected values.

Three systems (A, B, C), two segments, 4-dimensional handcrafted embeddings.
The expected values are computed here directly from the scoring formulas,
independently of the Rust implementation, and committed as expected.json.

    python3 fixtures/make_toy.py
"""
import json
import math
import os
import struct

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "toy")

REFERENCE = [
    [("the", (1, 0, 0, 0)), ("cat", (0, 1, 0, 0)), ("sat", (0, 0, 1, 0))],
    [("the", (1, 0, 0, 0)), ("the", (1, 1, 0, 0)), ("mat", (0, 0, 1, 1))],
]
SYSTEMS = {
    "A": [
        [("the", (1, 0, 0, 0)), ("cat", (0, 1, 0, 0)), ("sat", (0, 0, 1, 0))],
        [("the", (1, 1, 0, 0)), ("mat", (0, 0, 1, 1))],
    ],
    "B": [
        [("the", (1, 0, 0, 0)), ("dog", (0, 3, 4, 0)), ("sat", (0, 0, 1, 0))],
        [("the", (1, 0, 0, 0)), ("the", (1, 0, 0, 1)), ("rug", (0, 0, 1, 2))],
    ],
    "C": [
        [("a", (2, 0, 0, 1)), ("monkey", (0, 0, 0, 1)), ("sat", (0, 0, 2, 0)), ("down", (1, 0, 1, 1))],
        [],
    ],
}
HUMAN = {"A": 0.9, "B": 0.5, "C": 0.1}
DIM = 4


def write_emb1(path, segments):
    out = bytearray(b"EMB1")
    out += struct.pack("<HII", 1, DIM, len(segments))
    for index, seg in enumerate(segments):
        out += struct.pack("<II", index, len(seg))
        for token, _ in seg:
            raw = token.encode("utf-8")
            out += struct.pack("<H", len(raw)) + raw
        for _, vec in seg:
            out += struct.pack("<%df" % DIM, *vec)
    with open(path, "wb") as f:
        f.write(bytes(out))


def cos(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


def best(values):
    return max(values) if values else 0.0


def mean(values):
    return sum(values) / len(values) if values else 0.0


def f_score(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def difficulty(n, systems):
    ref = REFERENCE[n]
    weights = []
    for _, t in ref:
        total = 0.0
        for name in systems:
            total += best([cos(t, h) for _, h in SYSTEMS[name][n]])
        weights.append(1 - total / len(systems))
    return weights


def hyp_weight(n, hyp_token, hyp_vec, weights):
    candidates = [(cos(t, hyp_vec), -i, i) for i, (tok, t) in enumerate(REFERENCE[n]) if tok == hyp_token]
    if not candidates:
        return 1.0
    return weights[max(candidates)[2]]


def segment_scores(n, name, weights):
    ref, hyp = REFERENCE[n], SYSTEMS[name][n]
    ref_best = [best([cos(t, h) for _, h in hyp]) for _, t in ref]
    hyp_best = [best([cos(t, h) for _, t in ref]) for _, h in hyp]
    r, p = mean(ref_best), mean(hyp_best)
    da_r = mean([w * m for w, m in zip(weights, ref_best)])
    da_p = mean([hyp_weight(n, tok, h, weights) * m for (tok, h), m in zip(hyp, hyp_best)])
    return {
        "recall": r, "precision": p, "f": f_score(p, r),
        "da_recall": da_r, "da_precision": da_p, "da_f": f_score(da_p, da_r),
    }


def expected(exclude_self):
    names = sorted(SYSTEMS)
    out = {"difficulty": [difficulty(n, names) for n in range(len(REFERENCE))], "systems": {}}
    for name in names:
        others = [s for s in names if s != name] if exclude_self else names
        segs = [segment_scores(n, name, difficulty(n, others)) for n in range(len(REFERENCE))]
        out["systems"][name] = {
            "segments": segs,
            "bertscore": {k: mean([s[k] for s in segs]) for k in ("precision", "recall", "f")},
            "da_bertscore": {
                "precision": mean([s["da_precision"] for s in segs]),
                "recall": mean([s["da_recall"] for s in segs]),
                "f": mean([s["da_f"] for s in segs]),
            },
        }
    return out


def main():
    os.makedirs(os.path.join(HERE, "hyps"), exist_ok=True)
    os.makedirs(os.path.join(HERE, "emb"), exist_ok=True)
    with open(os.path.join(HERE, "refs.txt"), "w") as f:
        f.write("".join(" ".join(t for t, _ in seg) + "\n" for seg in REFERENCE))
    write_emb1(os.path.join(HERE, "ref.emb1"), REFERENCE)
    for name, segs in SYSTEMS.items():
        with open(os.path.join(HERE, "hyps", name + ".txt"), "w") as f:
            f.write("".join(" ".join(t for t, _ in seg) + "\n" for seg in segs))
        write_emb1(os.path.join(HERE, "emb", name + ".emb1"), segs)
    with open(os.path.join(HERE, "human.tsv"), "w") as f:
        f.write("".join("%s\t%s\n" % kv for kv in sorted(HUMAN.items())))
    with open(os.path.join(HERE, "expected.json"), "w") as f:
        json.dump({"default": expected(False), "exclude_self": expected(True)}, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
