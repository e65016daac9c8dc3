"""Classification metrics: unweighted accuracy, weighted F1, confusion matrix.

Unweighted accuracy (UACC) is macro-averaged recall over classes that appear
in the gold labels; weighted F1 (WF1) weights per-class F1 by gold support.
Predictions outside the label set are tallied per gold class in a separate
invalid column and count as errors without becoming a class of their own.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import StructuralError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns predicted; invalid[i] counts out-of-set preds."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]
    invalid: tuple[int, ...]
    total: int


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalResult:
    uacc: float
    wf1: float
    per_class: dict[str, ClassScores]
    n: int


def confusion(golds: list[str], preds: list[str], labels: list[str]) -> ConfusionMatrix:
    """Tally a gold x predicted grid; out-of-set predictions never crash.

    Raises ValueError on length mismatch, StructuralError when a gold label
    is outside the label set.
    """
    if len(golds) != len(preds):
        raise ValueError(
            f"gold/prediction length mismatch: {len(golds)} vs {len(preds)}"
        )
    index = {label: i for i, label in enumerate(labels)}
    if len(index) != len(labels):
        raise StructuralError(f"label set has duplicates: {labels}")
    grid = [[0] * len(labels) for _ in labels]
    invalid = [0] * len(labels)
    for gold, pred in zip(golds, preds):
        row = index.get(gold)
        if row is None:
            raise StructuralError(f"gold label {gold!r} is outside the label set {labels}")
        col = index.get(pred)
        if col is None:
            invalid[row] += 1
        else:
            grid[row][col] += 1
    return ConfusionMatrix(
        labels=tuple(labels),
        counts=tuple(tuple(row) for row in grid),
        invalid=tuple(invalid),
        total=len(golds),
    )


def score(cm: ConfusionMatrix) -> EvalResult:
    """Compute UACC/WF1 from a confusion matrix; 0/0 ratios score 0.

    Raises StructuralError on an empty matrix.
    """
    if cm.total <= 0:
        raise StructuralError("cannot score an empty confusion matrix")

    n_labels = len(cm.labels)
    per_class: dict[str, ClassScores] = {}
    recalls: list[float] = []
    wf1_sum = 0.0
    for i, label in enumerate(cm.labels):
        tp = cm.counts[i][i]
        support = sum(cm.counts[i]) + cm.invalid[i]
        predicted = sum(cm.counts[r][i] for r in range(n_labels))
        precision = tp / predicted if predicted > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        per_class[label] = ClassScores(precision, recall, f1, support)
        if support > 0:
            recalls.append(recall)
            wf1_sum += support * f1

    if not recalls:
        raise StructuralError("confusion matrix has no supported classes")
    return EvalResult(
        uacc=sum(recalls) / len(recalls),
        wf1=wf1_sum / cm.total,
        per_class=per_class,
        n=cm.total,
    )
