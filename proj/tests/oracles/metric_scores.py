"""Reference scores for tests/fixtures/eval/metric_pairs.json.

Re-derives tokenization, clipped ROUGE-N, LCS ROUGE-L and greedy BERTScore
from their definitions, with brute-force counting. Writes
tests/fixtures/eval/metric_fixture_scores.json.
"""
import json
import math
from collections import Counter
from pathlib import Path

EVAL = Path(__file__).resolve().parent.parent / "fixtures" / "eval"
MASK = (1 << 64) - 1


def tokenize(text):
    out, cur = [], []
    for ch in text:
        if ch.isalnum():
            cur.append(ch.lower())
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


def f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def prf(hits_r, ref_total, hits_p, cand_total):
    r = hits_r / ref_total if ref_total else 0.0
    p = hits_p / cand_total if cand_total else 0.0
    return {"recall": r, "precision": p, "f1": f1(p, r)}


def rouge_n(c, r, n):
    cg = Counter(tuple(c[i:i + n]) for i in range(len(c) - n + 1))
    rg = Counter(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
    if not cg or not rg:
        return prf(0, 0, 0, 0)
    overlap = sum(min(v, cg[g]) for g, v in rg.items())
    return prf(overlap, sum(rg.values()), overlap, sum(cg.values()))


def lcs(a, b):
    t = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a)):
        for j in range(len(b)):
            t[i + 1][j + 1] = t[i][j] + 1 if a[i] == b[j] else max(t[i][j + 1], t[i + 1][j])
    return t[-1][-1]


def rouge_l(c, r):
    if not c or not r:
        return prf(0, 0, 0, 0)
    n = lcs(c, r)
    return prf(n, len(r), n, len(c))


def fnv(data, seed=1469598103934665603):
    h = seed
    for byte in data:
        h ^= byte
        h = (h * 1099511628211) & MASK
    return h


def hashed_vec(tok, dims=512):
    v = [0.0] * dims
    v[fnv(tok.encode()) % dims] += 2.0
    marked = ("^" + tok + "$").encode()
    for i in range(len(marked) - 2):
        v[fnv(marked[i:i + 3], 0x9E3779B97F4A7C15) % dims] += 1.0
    norm = math.sqrt(sum(x * x for x in v))
    return [x / norm for x in v]


def bert(c, r):
    if not c or not r:
        return prf(0, 0, 0, 0)
    ce = [hashed_vec(t) for t in c]
    re_ = [hashed_vec(t) for t in r]

    def best(x, ys):
        return min(1.0, max(0.0, max(sum(a * b for a, b in zip(x, y)) for y in ys)))

    rec = sum(best(x, ce) for x in re_)
    pre = sum(best(x, re_) for x in ce)
    return prf(rec, len(r), pre, len(c))


def main():
    pairs = json.loads((EVAL / "metric_pairs.json").read_text())
    out = []
    for p in pairs:
        c, r = tokenize(p["candidate"]), tokenize(p["reference"])
        out.append({"id": p["id"], "rouge1": rouge_n(c, r, 1), "rouge2": rouge_n(c, r, 2),
                    "rougeL": rouge_l(c, r), "bert": bert(c, r)})
    (EVAL / "metric_fixture_scores.json").write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
