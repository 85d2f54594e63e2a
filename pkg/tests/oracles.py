"""Brute-force metric oracles: pure-Python loops, independent of the package.

Every function here recomputes its statistic by direct counting or pair
enumeration so the vectorized implementations can be checked against them.
"""

import math


def brute_confusion(y_true, y_pred, num_classes):
    counts = [[0] * num_classes for _ in range(num_classes)]
    for t, p in zip(y_true, y_pred):
        counts[t][p] += 1
    return counts


def brute_per_class(y_true, y_pred, num_classes):
    precision, recall, f1, support = [], [], [], []
    for c in range(num_classes):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precision.append(prec)
        recall.append(rec)
        f1.append(f)
        support.append(tp + fn)
    return precision, recall, f1, support


def brute_accuracy(y_true, y_pred):
    return sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)


def brute_balanced_accuracy(y_true, y_pred, num_classes):
    _, recall, _, _ = brute_per_class(y_true, y_pred, num_classes)
    return sum(recall) / num_classes


def brute_mcc(y_true, y_pred, num_classes):
    n = len(y_true)
    c = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    t_k = [sum(1 for t in y_true if t == k) for k in range(num_classes)]
    p_k = [sum(1 for p in y_pred if p == k) for k in range(num_classes)]
    num = c * n - sum(t * p for t, p in zip(t_k, p_k))
    den = math.sqrt(n * n - sum(p * p for p in p_k)) * math.sqrt(
        n * n - sum(t * t for t in t_k)
    )
    return num / den if den else 0.0


def brute_kappa(y_true, y_pred, num_classes):
    n = len(y_true)
    p_o = brute_accuracy(y_true, y_pred)
    t_k = [sum(1 for t in y_true if t == k) for k in range(num_classes)]
    p_k = [sum(1 for p in y_pred if p == k) for k in range(num_classes)]
    p_e = sum(t * p for t, p in zip(t_k, p_k)) / (n * n)
    return (p_o - p_e) / (1 - p_e) if 1 - p_e else 0.0


def brute_binary_auc(scores, positives):
    """Directly enumerate every positive-negative pair."""
    pos = [s for s, is_pos in zip(scores, positives) if is_pos]
    neg = [s for s, is_pos in zip(scores, positives) if not is_pos]
    credit = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                credit += 1.0
            elif sp == sn:
                credit += 0.5
    return credit / (len(pos) * len(neg))


def brute_macro_auc(score_rows, y_true, num_classes):
    aucs = []
    n = len(y_true)
    for c in range(num_classes):
        positives = [t == c for t in y_true]
        n_pos = sum(positives)
        if n_pos == 0 or n_pos == n:
            continue
        aucs.append(brute_binary_auc([row[c] for row in score_rows], positives))
    return sum(aucs) / len(aucs)
