"""Micro- and Macro-F1 for multi-label predictions over label-id sets."""

from __future__ import annotations


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def micro_f1(preds, golds) -> float:
    """F1 of precision/recall pooled over all instances and labels."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    tp = fp = fn = 0
    for p, g in zip(preds, golds):
        p, g = set(p), set(g)
        tp += len(p & g)
        fp += len(p - g)
        fn += len(g - p)
    return _f1(tp, fp, fn)


def macro_f1(preds, golds, label_count: int) -> float:
    """Unweighted mean of per-label F1 over all `label_count` labels;
    labels absent from both sides score 0."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    tp = [0] * label_count
    fp = [0] * label_count
    fn = [0] * label_count
    for p, g in zip(preds, golds):
        p, g = set(p), set(g)
        for y in p | g:
            if y >= label_count or y < 0:
                raise ValueError(f"label {y} out of range for {label_count} labels")
            if y in p and y in g:
                tp[y] += 1
            elif y in p:
                fp[y] += 1
            else:
                fn[y] += 1
    return sum(_f1(tp[y], fp[y], fn[y]) for y in range(label_count)) / label_count
