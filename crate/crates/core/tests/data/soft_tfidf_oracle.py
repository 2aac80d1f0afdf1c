"""Reference Soft-TFIDF values for the golden table in soft_tfidf_golden.csv.

Run with `python3 soft_tfidf_oracle.py > soft_tfidf_golden.csv`. The corpus for
each case is the two strings themselves.
"""

import math
import re

CASES = [
    ("Mickey Beats", "Mickey Beets", 0.5),
    ("W. Beats Jr.", "Beats, W.", 0.8),
    ("Jon Smith", "John Smyth", 0.9),
    ("12 Pike Lane", "12 Pike Ln", 0.5),
    ("Susan Sorrow", "Samuel Sorrow Jr", 0.7),
]


def tokens(s):
    return [t for t in re.split(r"[\s,;/]+", s.lower()) if t]


def jaro(a, b):
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(max(len(a), len(b)) // 2 - 1, 0)
    a_hit = [False] * len(a)
    b_hit = [False] * len(b)
    m = 0
    for i, ca in enumerate(a):
        for j in range(max(0, i - window), min(len(b), i + window + 1)):
            if not b_hit[j] and b[j] == ca:
                a_hit[i] = b_hit[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    a_seq = [c for c, h in zip(a, a_hit) if h]
    b_seq = [c for c, h in zip(b, b_hit) if h]
    t = sum(x != y for x, y in zip(a_seq, b_seq)) // 2
    return (m / len(a) + m / len(b) + (m - t) / m) / 3.0


def jaro_winkler(a, b):
    j = jaro(a, b)
    if j <= 0.7:
        return j
    p = 0
    for x, y in zip(a[:4], b[:4]):
        if x != y:
            break
        p += 1
    return j + 0.1 * p * (1.0 - j)


def weights(s, df, n):
    tf = {}
    for t in tokens(s):
        tf[t] = tf.get(t, 0) + 1
    w = {t: c * math.log(1.0 + n / max(df.get(t, 0), 1)) for t, c in tf.items()}
    norm = math.sqrt(sum(x * x for x in w.values()))
    return {t: x / norm for t, x in w.items()} if norm > 0 else w


def soft_tfidf(s1, s2, theta):
    docs = [s1, s2]
    df = {}
    for d in docs:
        for t in set(tokens(d)):
            df[t] = df.get(t, 0) + 1
    v1, v2 = weights(s1, df, len(docs)), weights(s2, df, len(docs))
    if not v1 or not v2:
        return 0.0
    total = 0.0
    for w in sorted(v1):
        best, best_v = None, None
        for v in sorted(v2):
            sim = jaro_winkler(w, v)
            if best is None or sim > best:
                best, best_v = sim, v
        if best >= theta:
            total += v1[w] * v2[best_v] * best
    return min(max(total, 0.0), 1.0)


if __name__ == "__main__":
    print("s1,s2,theta,expected")
    for s1, s2, theta in CASES:
        print(f'"{s1}","{s2}",{theta},{soft_tfidf(s1, s2, theta)!r}')
