"""Corpus-scale experiments: train on one synthetic fragment, test on the rest;
and recognise several filaments in one large fragment."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import learning, metrics, network, synthgen
from .image_io import DetectionMask
from .windowing import WindowConfig


@dataclass(frozen=True)
class ProtocolResult:
    model: network.ModelWeights
    ids: list[str]
    scores: list[metrics.Score]
    masks: list[DetectionMask]

    @property
    def f1(self) -> np.ndarray:
        return np.array([s.f1 for s in self.scores])

    def csv(self) -> str:
        return metrics.scores_to_csv(zip(self.ids, self.scores))


def one_vs_rest(count: int = 55, seed: int = 0, base: synthgen.SynthParams = synthgen.SynthParams(),
                ranges: synthgen.CorpusRanges = synthgen.CorpusRanges(), k: int = 5, degree: int = 2,
                robust: bool = True, pcfg: learning.PerceptronConfig = learning.PerceptronConfig(),
                train_index: int = 0) -> ProtocolResult:
    """Train on one corpus fragment, detect (with per-image background refit) on all others."""
    cfg = WindowConfig(k)
    data = synthgen.corpus(count, base, seed, ranges)
    X, M = data[train_index]
    model = learning.train(X, M, cfg, pcfg, robust, degree=degree, bg_refit=True)
    ids, scores, masks = [], [], []
    for i, (X, M) in enumerate(data):
        if i == train_index:
            continue
        det = network.forward(X, model)
        ids.append(f"frag_{i:03d}")
        scores.append(metrics.score(det, M, cfg))
        masks.append(det)
    return ProtocolResult(model, ids, scores, masks)


@dataclass(frozen=True)
class MultiResult:
    params: synthgen.SynthParams
    mask: DetectionMask
    recalls: list[float]
    score: metrics.Score


def multi_filament(model: network.ModelWeights, seed: int = 1000, size: int = 512, filaments: int = 4,
                   ranges: synthgen.CorpusRanges = synthgen.CorpusRanges()) -> MultiResult:
    """Detect on one large fragment holding several filaments; report recall per filament."""
    ranges = dataclasses.replace(ranges, filaments=(filaments, filaments))
    p = synthgen.fragment_params(seed, synthgen.SynthParams(n=size, m=size), ranges)
    X, M = synthgen.generate(p)
    det = network.forward(X, model)
    h = model.window.half
    pred = det.labels
    recalls = []
    for region in synthgen.filament_masks(p):
        inner = region[h:size - h, h:size - h]
        recalls.append(float(pred[inner].mean()) if inner.any() else 0.0)
    return MultiResult(p, det, recalls, metrics.score(det, M, model.window))
