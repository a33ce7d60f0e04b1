"""Brute-force tied-rank Pearson correlation, independent of scipy."""

import math


def average_ranks(values):
    ranks = []
    for v in values:
        below = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        ranks.append(below + (equal + 1) / 2)
    return ranks


def pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def oracle_rho(order, gold):
    """Top of ``order`` counts as the highest system value."""
    system = [len(order) - pos for pos in range(len(order))]
    return pearson(average_ranks(system), average_ranks([gold[a] for a in order]))
