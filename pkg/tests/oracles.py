"""Brute-force reference implementations, written loop-by-loop on purpose."""

import math


def chi_square_oracle(column, labels):
    n = len(labels)
    total = 0.0
    for v in column:
        total += v
    if total == 0:
        return 0.0
    score = 0.0
    for cls in (0, 1):
        observed = 0.0
        n_k = 0
        for v, lab in zip(column, labels):
            if lab == cls:
                observed += v
                n_k += 1
        expected = n_k / n * total
        score += (observed - expected) ** 2 / expected
    return score


def correlation_oracle(column, labels):
    n = len(labels)
    mx = sum(column) / n
    my = sum(labels) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(column, labels)) / n
    vx = sum((x - mx) ** 2 for x in column) / n
    vy = sum((y - my) ** 2 for y in labels) / n
    if vx == 0 or vy == 0:
        return 0.0
    return abs(cov) / math.sqrt(vx * vy)


def auc_oracle(labels, scores):
    pos = [s for s, lab in zip(scores, labels) if lab == 1]
    neg = [s for s, lab in zip(scores, labels) if lab == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def plugin_mi_oracle(a, b):
    """Plug-in mutual information in nats between two discrete sequences."""
    n = len(a)
    joint, pa, pb = {}, {}, {}
    for u, v in zip(a, b):
        joint[(u, v)] = joint.get((u, v), 0) + 1
        pa[u] = pa.get(u, 0) + 1
        pb[v] = pb.get(v, 0) + 1
    total = 0.0
    for (u, v), c in joint.items():
        total += c / n * math.log(c * n / (pa[u] * pb[v]))
    return total
