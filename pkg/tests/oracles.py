"""Straight-line reference implementations used only by tests.

These deliberately avoid numpy vectorisation and the library's helpers so a
shared bug cannot hide in both routes.
"""

import math


def brute_fdr(scores, labels, t):
    accepted = wrong = 0
    for s, y in zip(scores, labels):
        if s >= t:
            accepted += 1
            if y == 0:
                wrong += 1
    return wrong / max(1, accepted)


def brute_threshold(scores, labels, alpha):
    """Exhaustive search over every unique score, smallest first."""
    for t in sorted(set(scores)):
        if brute_fdr(scores, labels, t) <= alpha:
            return t
    return math.inf


def brute_ece(conf, labels, num_bins):
    total = len(conf)
    err = 0.0
    for k in range(num_bins):
        lo, hi = k / num_bins, (k + 1) / num_bins
        members = [
            (p, y)
            for p, y in zip(conf, labels)
            if (lo <= p < hi) or (k == num_bins - 1 and p == 1.0)
        ]
        if not members:
            continue
        mean_conf = sum(p for p, _ in members) / len(members)
        acc = sum(y for _, y in members) / len(members)
        err += len(members) / total * abs(acc - mean_conf)
    return err


def brute_brier(conf, labels):
    return sum((p - y) ** 2 for p, y in zip(conf, labels)) / len(conf)


def brute_prf(pred_keys, gold_keys):
    """Multiset matching by repeated removal; keys include the doc id."""
    remaining = list(gold_keys)
    tp = 0
    for k in pred_keys:
        if k in remaining:
            remaining.remove(k)
            tp += 1
    fp = len(pred_keys) - tp
    fn = len(gold_keys) - tp
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return tp, fp, fn, p, r
