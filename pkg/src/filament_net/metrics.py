"""Pixel-level scoring of detection masks against ground truth."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .image_io import DetectionMask, LabelMask
from .windowing import WindowConfig

__all__ = ["Confusion", "Score", "confusion", "score", "mean_score", "scores_to_csv", "CSV_FIELDS"]

CSV_FIELDS = ("fragment_id", "tp", "fp", "tn", "fn", "precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Score:
    """Confusion counts plus derived rates.

    A rate whose denominator is zero is reported as 0 and its name is listed
    in ``undefined``.
    """

    confusion: Confusion
    precision: float
    recall: float
    f1: float
    accuracy: float
    undefined: tuple[str, ...] = ()

    @classmethod
    def from_confusion(cls, c: Confusion) -> "Score":
        undefined = []

        def ratio(name, num, den):
            if den == 0:
                undefined.append(name)
                return 0.0
            return num / den

        precision = ratio("precision", c.tp, c.tp + c.fp)
        recall = ratio("recall", c.tp, c.tp + c.fn)
        f1 = ratio("f1", 2 * c.tp, 2 * c.tp + c.fp + c.fn)
        accuracy = ratio("accuracy", c.tp + c.tn, c.total)
        return cls(c, precision, recall, f1, accuracy, tuple(undefined))


def confusion(pred: np.ndarray, truth: np.ndarray) -> Confusion:
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction {pred.shape} and truth {truth.shape} differ in shape")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    return Confusion(tp, fp, pred.size - tp - fp - fn, fn)


def _interior(labels: np.ndarray, k: int) -> np.ndarray:
    h = k // 2
    n, m = labels.shape
    return labels[h:n - h, h:m - h]


def score(pred: DetectionMask | LabelMask | np.ndarray, truth: LabelMask | np.ndarray,
          cfg: WindowConfig) -> Score:
    """Compare over the interior region only.

    ``pred`` may be interior-sized or padded to the full image; ``truth`` must
    be full-size.
    """
    p = pred.labels if hasattr(pred, "labels") else np.asarray(pred, dtype=bool)
    t = truth.labels if hasattr(truth, "labels") else np.asarray(truth, dtype=bool)
    n, m = t.shape
    interior = (n - cfg.k + 1, m - cfg.k + 1)
    if interior[0] < 1 or interior[1] < 1:
        raise ShapeError(f"truth {n}x{m} is smaller than the {cfg.k}x{cfg.k} window")
    if p.shape == t.shape:
        p = _interior(p, cfg.k)
    elif p.shape != interior:
        raise ShapeError(
            f"prediction {p.shape[0]}x{p.shape[1]} matches neither the truth {n}x{m} "
            f"nor its {interior[0]}x{interior[1]} interior for k={cfg.k}"
        )
    return Score.from_confusion(confusion(p, _interior(t, cfg.k)))


def mean_score(scores) -> dict[str, float]:
    scores = list(scores)
    if not scores:
        raise ValueError("no scores to average")
    out = {}
    for name in ("tp", "fp", "tn", "fn"):
        out[name] = float(np.mean([getattr(s.confusion, name) for s in scores]))
    for name in ("precision", "recall", "f1", "accuracy"):
        out[name] = float(np.mean([getattr(s, name) for s in scores]))
    return out


def _fmt(x) -> str:
    return str(x) if isinstance(x, int) else f"{x:.6f}"


def scores_to_csv(rows, mean_label: str | None = "mean") -> str:
    """CSV text for ``(fragment_id, Score)`` pairs, optionally closed by a mean row."""
    rows = list(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for fid, s in rows:
        c = s.confusion
        writer.writerow([fid, c.tp, c.fp, c.tn, c.fn] + [_fmt(v) for v in (s.precision, s.recall, s.f1, s.accuracy)])
    if mean_label is not None and rows:
        avg = mean_score(s for _, s in rows)
        writer.writerow([mean_label] + [_fmt(avg[k]) for k in CSV_FIELDS[1:]])
    return buf.getvalue()
