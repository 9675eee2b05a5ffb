"""File-level workflows shared by the command line and the demos: train on one
labelled fragment, detect on images or whole directories, score, synthesise.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import learning, metrics, network, synthgen
from .image_io import DetectionMask, load_image, load_mask, save_image, save_mask
from .windowing import WindowConfig

__all__ = [
    "RunConfig",
    "TrainOutcome",
    "train_files",
    "detect_image",
    "detect_files",
    "detect_directory",
    "eval_files",
    "eval_directory",
    "write_corpus",
    "fragment_id",
]

IMAGE_SUFFIX = "_image"
MASK_SUFFIX = "_mask"
PRED_SUFFIX = "_pred"


@dataclass(frozen=True)
class RunConfig:
    k: int = 5
    degree: int = 2
    robust: bool = True
    huber_delta: float | None = None
    perceptron: learning.PerceptronConfig = field(default_factory=learning.PerceptronConfig)
    bg_refit: bool = True
    pad: bool = False
    workers: int = 1

    def __post_init__(self):
        WindowConfig(self.k)
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")
        if self.huber_delta is not None and not self.huber_delta > 0:
            raise ValueError("huber_delta must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(self.k)


@dataclass(frozen=True)
class TrainOutcome:
    model: network.ModelWeights
    training_error: int
    examples: int
    background_rms: float


def fragment_id(path) -> str:
    """``frag_007_image.pgm`` -> ``frag_007``; other names keep their stem."""
    stem = Path(path).stem
    for suffix in (IMAGE_SUFFIX, MASK_SUFFIX, PRED_SUFFIX):
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def train_files(image_path, mask_path, cfg: RunConfig = RunConfig()) -> TrainOutcome:
    X = load_image(image_path)
    mask = load_mask(mask_path)
    model = learning.train(X, mask, cfg.window, cfg.perceptron, cfg.robust, degree=cfg.degree,
                           huber_delta=cfg.huber_delta, bg_refit=cfg.bg_refit)
    # error counted through the detection path so a later detect run reproduces it
    pred = network.forward(X, model)
    truth = mask.interior(cfg.k)
    err = int(np.count_nonzero(pred.labels != truth))
    s, _, used = network.network_features(X, model)
    rms = float(np.sqrt(np.mean((s - network.background_curve(used, s.size)) ** 2)))
    return TrainOutcome(model, err, truth.size, rms)


def apply_overrides(model: network.ModelWeights, bg_refit: bool | None = None,
                    robust: bool | None = None, huber_delta: float | None = None) -> network.ModelWeights:
    changes = {}
    if bg_refit is not None:
        changes["bg_refit"] = bg_refit
    if robust is not None:
        changes["bg_robust"] = robust
    if huber_delta is not None:
        changes["bg_huber_delta"] = huber_delta
    return replace(model, **changes) if changes else model


def detect_image(X, model: network.ModelWeights) -> DetectionMask:
    return network.forward(X, model)


def detect_files(image_path, model: network.ModelWeights, out_path, pad: bool = False) -> DetectionMask:
    det = network.forward(load_image(image_path), model)
    save_mask(det.padded() if pad else det, out_path)
    return det


def _images_in(directory) -> list[Path]:
    d = Path(directory)
    found = sorted(d.glob(f"*{IMAGE_SUFFIX}.pgm"))
    return found or sorted(p for p in d.glob("*.pgm") if not p.stem.endswith((MASK_SUFFIX, PRED_SUFFIX)))


def detect_directory(image_dir, model: network.ModelWeights, out_dir, pad: bool = False,
                     exclude=(), workers: int = 1) -> list[tuple[str, DetectionMask]]:
    """Detect on every fragment image in ``image_dir``; results are in name order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    excluded = set(exclude)
    paths = [p for p in _images_in(image_dir) if fragment_id(p) not in excluded]

    def run(p):
        fid = fragment_id(p)
        return fid, detect_files(p, model, out_dir / f"{fid}{PRED_SUFFIX}.pgm", pad)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, paths))
    return [run(p) for p in paths]


def eval_files(pred_path, truth_path, k: int) -> metrics.Score:
    return metrics.score(load_mask(pred_path), load_mask(truth_path), WindowConfig(k))


def eval_directory(pred_dir, truth_dir, k: int) -> list[tuple[str, metrics.Score]]:
    """Score each prediction in ``pred_dir`` against ``<id>_mask.pgm`` in ``truth_dir``."""
    truth_dir = Path(truth_dir)
    rows = []
    for p in sorted(Path(pred_dir).glob("*.pgm")):
        if p.stem.endswith(MASK_SUFFIX) or p.stem.endswith(IMAGE_SUFFIX):
            continue
        fid = fragment_id(p)
        truth = truth_dir / f"{fid}{MASK_SUFFIX}.pgm"
        if not truth.exists():
            raise FileNotFoundError(f"no ground truth {truth} for prediction {p}")
        rows.append((fid, eval_files(p, truth, k)))
    if not rows:
        raise FileNotFoundError(f"no prediction masks found in {pred_dir}")
    return rows


def _manifest_line(fid: str, p: synthgen.SynthParams) -> str:
    fils = ";".join(
        f"half_width={f.half_width!r},depth={f.depth!r},points="
        + " ".join(f"{r!r}:{c!r}" for r, c in f.points)
        for f in p.filaments
    )
    bg = ",".join(repr(b) for b in p.background)
    return f"{fid} seed={p.seed} n={p.n} m={p.m} noise_sigma={p.noise_sigma!r} background={bg} filaments=[{fils}]"


def write_corpus(out_dir, count: int, base: synthgen.SynthParams, seed: int,
                 ranges: synthgen.CorpusRanges = synthgen.CorpusRanges()) -> list[str]:
    """Write ``count`` image/mask pairs and ``manifest.txt`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = synthgen.corpus_params(count, base, seed, ranges)
    width = max(3, len(str(count - 1)))
    lines = [
        f"# corpus seed={seed} count={count} n={base.n} m={base.m} noise_sigma={base.noise_sigma!r}",
        "# ranges " + " ".join(f"{k}={v!r}" for k, v in vars(ranges).items()),
    ]
    ids = []
    for i, p in enumerate(params):
        fid = f"frag_{i:0{width}d}"
        X, M = synthgen.generate(p)
        save_image(X, out_dir / f"{fid}{IMAGE_SUFFIX}.pgm")
        save_mask(M, out_dir / f"{fid}{MASK_SUFFIX}.pgm")
        lines.append(_manifest_line(fid, p))
        ids.append(fid)
    with open(out_dir / "manifest.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return ids


def is_dir(path) -> bool:
    return os.path.isdir(path)
