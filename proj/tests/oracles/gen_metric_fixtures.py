#!/usr/bin/env python3
"""Independent oracle for the text-metric fixture corpus.

Implements the metric definitions directly (token counters, LCS table,
greedy two-stage matcher) and prints the frozen expected values pasted into
tests/metrics_tests.cpp. Rerun after any deliberate metric change:

    python3 tests/oracles/gen_metric_fixtures.py
"""

import math
import string

PUNCT = set(string.punctuation)


def tokenize(text):
    out, cur = [], []
    for ch in text:
        if ch.isspace() and ord(ch) < 128:
            if cur:
                out.append("".join(cur))
                cur = []
        elif ch in PUNCT:
            if cur:
                out.append("".join(cur))
                cur = []
            out.append(ch)
        else:
            cur.append(ch.lower())
    if cur:
        out.append("".join(cur))
    return out


def stem(tok):
    if tok.endswith("ing") and len(tok) > 5:
        return tok[:-3]
    if tok.endswith("ed") and len(tok) > 4:
        return tok[:-2]
    if tok.endswith("es") and len(tok) > 4:
        return tok[:-2]
    if tok.endswith("ly") and len(tok) > 4:
        return tok[:-2]
    if tok.endswith("s") and not tok.endswith("ss") and len(tok) > 3:
        return tok[:-1]
    return tok


def ngrams(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        key = tuple(tokens[i:i + n])
        counts[key] = counts.get(key, 0) + 1
    return counts


def bleu4(candidate, references):
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    eps = 1e-9
    log_sum = 0.0
    for n in range(1, 5):
        cc = ngrams(cand, n)
        total = sum(cc.values())
        clipped = 0
        for key, count in cc.items():
            best = max((ngrams(r, n).get(key, 0) for r in refs), default=0)
            clipped += min(count, best)
        p = eps if (total == 0 or clipped == 0) else clipped / total
        log_sum += 0.25 * math.log(p)
    ref_len = len(refs[0])
    for r in refs:
        if (abs(len(r) - len(cand)), len(r)) < (abs(ref_len - len(cand)), ref_len):
            ref_len = len(r)
    bp = 1.0 if len(cand) >= ref_len else math.exp(1.0 - ref_len / len(cand))
    return bp * math.exp(log_sum)


def rouge_l(candidate, reference):
    cand, ref = tokenize(candidate), tokenize(reference)
    m, n = len(cand), len(ref)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            dp[i][j] = dp[i - 1][j - 1] + 1 if cand[i - 1] == ref[j - 1] \
                else max(dp[i - 1][j], dp[i][j - 1])
    lcs = dp[m][n]
    if lcs == 0:
        return 0.0
    p, r = lcs / m, lcs / n
    return 2 * p * r / (p + r)


def meteor_lite(candidate, reference):
    cand, ref = tokenize(candidate), tokenize(reference)
    match = [-1] * len(cand)
    used = [False] * len(ref)
    for key in (lambda t: t, stem):
        for i, c in enumerate(cand):
            if match[i] >= 0:
                continue
            for j, r in enumerate(ref):
                if not used[j] and key(c) == key(r):
                    match[i] = j
                    used[j] = True
                    break
    matches = sum(1 for m in match if m >= 0)
    if matches == 0:
        return 0.0
    chunks, prev_i, prev_j = 0, -2, -2
    for i, j in enumerate(match):
        if j < 0:
            continue
        if i != prev_i + 1 or j != prev_j + 1:
            chunks += 1
        prev_i, prev_j = i, j
    p = matches / len(cand)
    r = matches / len(ref)
    f = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / matches) ** 3
    return f * (1 - penalty)


CORPUS = [
    ("the cat sat on the mat", "the cat is on the mat"),
    ("a tall building stands near the river", "a tall tower stands by the river"),
    ("the parking lot is southwest of the news center",
     "the news center lies northeast of the parking lot"),
    ("three cars are parked along the street",
     "several cars are parked on the street"),
    ("this district mixes offices and small shops",
     "the district combines offices with small shops"),
    ("walk north for fifty meters then turn east",
     "head north about fifty meters and turn east"),
    ("the hospital is the closest public facility",
     "the nearest public facility is the hospital"),
    ("its flat roof suggests a warehouse", "a flat roof suggests storage use"),
    ("green space covers the southern half of the block",
     "the southern half of the block is green space"),
    ("the bridge crosses the railway near the station",
     "a bridge spans the railway beside the station"),
    ("buses stop directly outside the main entrance",
     "the bus stops right at the main entrance"),
    ("the tower is eighty meters tall", "the tower rises eighty meters"),
    ("pedestrians can reach the park through two gates",
     "two gates let pedestrians into the park"),
    ("heavy traffic fills the avenue at noon",
     "the avenue carries heavy traffic at midday"),
    ("the school sits between two residential blocks",
     "two residential blocks surround the school"),
    ("a fountain marks the center of the plaza",
     "the plaza has a fountain at its center"),
    ("warehouses line the eastern edge of the district",
     "the district's eastern edge is lined with warehouses"),
    ("the clinic shares a wall with the pharmacy",
     "the pharmacy is attached to the clinic"),
    ("street lamps illuminate the walking path",
     "lamps light the pedestrian path"),
    ("the stadium dominates the city skyline",
     "the skyline is dominated by the stadium"),
]


def main():
    print("// Frozen oracle values; regenerate with gen_metric_fixtures.py")
    print("const MetricCase kMetricCases[] = {")
    for cand, ref in CORPUS:
        b = bleu4(cand, [ref])
        r = rouge_l(cand, ref)
        m = meteor_lite(cand, ref)
        print(f'    {{"{cand}",\n     "{ref}",\n'
              f"     {b:.12f}, {r:.12f}, {m:.12f}}},")
    print("};")

    print()
    spot = [
        ("bleu 'the cat sat...' pair", bleu4("the cat sat on the mat",
                                             ["the cat is on the mat"])),
        ("rouge 'the cat sat' vs 'the cat ran'", rouge_l("the cat sat",
                                                         "the cat ran")),
        ("meteor single token identity", meteor_lite("yes", "yes")),
    ]
    for name, value in spot:
        print(f"// {name}: {value:.12f}")


if __name__ == "__main__":
    main()
