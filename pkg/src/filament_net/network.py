"""The three-unit recognition network and its forward pass.

A summation unit turns each window into ``s``, a background unit models the
slowly varying brightness ``u`` as a polynomial in the scan index, and a
threshold unit decides filament vs. background from ``(s, u)``. ``y = 1``
(``True``) means filament throughout.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import FormatError, ShapeError
from .image_io import DetectionMask, ImageFragment
from .windowing import WindowConfig, build_columns, interior_shape

__all__ = [
    "SummationWeights",
    "BackgroundCoefficients",
    "OutputWeights",
    "ModelWeights",
    "hidden_sum",
    "normalize_index",
    "background_eval",
    "background_curve",
    "output_decide",
    "decide",
    "forward",
    "network_features",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
]


@dataclass(frozen=True, eq=False)
class SummationWeights:
    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def unit(cls, r: int) -> "SummationWeights":
        return cls(np.ones(r), 0.0)

    @property
    def r(self) -> int:
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, SummationWeights):
            return NotImplemented
        return self.bias == other.bias and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True)
class BackgroundCoefficients:
    """Polynomial ``c0 + c1 t + c2 t**2`` over the normalized scan index ``t``."""

    c0: float
    c1: float = 0.0
    c2: float = 0.0
    degree: int = 2

    def __post_init__(self):
        if self.degree not in (1, 2):
            raise ValueError(f"background degree must be 1 or 2, got {self.degree}")
        if self.degree == 1 and self.c2 != 0.0:
            raise ValueError("a degree-1 background must have c2 == 0")
        for name in ("c0", "c1", "c2"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2][: self.degree + 1])


@dataclass(frozen=True)
class OutputWeights:
    """Threshold unit: filament iff ``ws * s + wu * u >= w0`` on scaled features."""

    w0: float = 0.0
    ws: float = 0.0
    wu: float = 0.0

    def scaled(self, lam: float) -> "OutputWeights":
        return OutputWeights(self.w0 * lam, self.ws * lam, self.wu * lam)


@dataclass(frozen=True)
class ModelWeights:
    window: WindowConfig
    summation: SummationWeights
    background: BackgroundCoefficients
    output: OutputWeights
    feature_scale: float
    bg_refit: bool = True
    bg_robust: bool = False
    bg_huber_delta: float | None = None

    def __post_init__(self):
        if not self.feature_scale > 0:
            raise ValueError(f"feature_scale must be positive, got {self.feature_scale}")
        if self.summation.r != self.window.r:
            raise ShapeError(
                f"summation unit has {self.summation.r} weights but the window holds {self.window.r} pixels"
            )

    def with_(self, **changes) -> "ModelWeights":
        return replace(self, **changes)


# --------------------------------------------------------------------------
# neuron activations


def hidden_sum(z, w: SummationWeights) -> np.ndarray | float:
    """Weighted window sum ``bias + sum_i w_i z_i``.

    ``z`` may be one column of length r or an ``(r, q)`` block; pixels are
    accumulated in a fixed order so results do not depend on block size.
    """
    z = np.asarray(z)
    if z.shape[0] != w.r:
        raise ShapeError(f"window column has {z.shape[0]} pixels, weights expect {w.r}")
    s = np.full(z.shape[1:], w.bias, dtype=float)
    for i in range(w.r):
        s += w.weights[i] * z[i]
    return float(s) if s.ndim == 0 else s


def normalize_index(j, q: int):
    """Map scan index 1..q affinely onto [-1, 1]."""
    j_arr = np.asarray(j)
    if q < 1 or np.any(j_arr < 1) or np.any(j_arr > q):
        raise IndexError(f"scan index outside 1..{q}")
    if q == 1:
        t = np.zeros(j_arr.shape)
    else:
        t = (2.0 * j_arr - (q + 1)) / (q - 1)
    return float(t) if t.ndim == 0 else t


def background_eval(c: BackgroundCoefficients, j, q: int):
    t = normalize_index(j, q)
    return c.c0 + c.c1 * t + c.c2 * (t * t)


def background_curve(c: BackgroundCoefficients, q: int) -> np.ndarray:
    return np.asarray(background_eval(c, np.arange(1, q + 1), q), dtype=float)


def output_decide(s: float, u: float, w: OutputWeights, scale: float) -> bool:
    if not scale > 0:
        raise ValueError("scale must be positive")
    return bool(w.ws * (s / scale) + w.wu * (u / scale) >= w.w0)


def decide(features: np.ndarray, w: OutputWeights) -> np.ndarray:
    """Vectorised threshold on already-scaled ``(h, 2)`` features."""
    return w.ws * features[:, 0] + w.wu * features[:, 1] >= w.w0


# --------------------------------------------------------------------------
# forward pass


def _summation(Z: np.ndarray, w: SummationWeights, block_size: int | None, workers: int) -> np.ndarray:
    q = Z.shape[1]
    if block_size is None or block_size >= q:
        return hidden_sum(Z, w)
    starts = range(0, q, block_size)
    blocks = (Z[:, a:a + block_size] for a in starts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: hidden_sum(b, w), blocks))
    else:
        parts = [hidden_sum(b, w) for b in blocks]
    return np.concatenate(parts)


def network_features(X: ImageFragment, model: ModelWeights, *, block_size: int | None = None,
                     workers: int = 1):
    """Hidden-layer outputs for every window.

    Returns ``(s, u, background)`` where ``background`` is the coefficient set
    actually used: refitted on ``X`` when ``model.bg_refit`` is set, otherwise
    the stored one.
    """
    cols = build_columns(X, model.window)
    s = _summation(cols.data, model.summation, block_size, workers)
    if model.bg_refit and s.size <= model.background.degree:
        # too few windows for the stored degree: least squares collapses to the mean
        background = BackgroundCoefficients(float(np.mean(s)), 0.0, 0.0, degree=1)
        if s.size == 2:
            background = BackgroundCoefficients((s[0] + s[1]) / 2, (s[1] - s[0]) / 2, 0.0, degree=1)
    elif model.bg_refit:
        from .learning import estimate_background

        background = estimate_background(
            s, model.background.degree, robust=model.bg_robust, huber_delta=model.bg_huber_delta
        ).coefficients
    else:
        background = model.background
    u = background_curve(background, s.size)
    return s, u, background


def forward(X: ImageFragment, model: ModelWeights, *, block_size: int | None = None,
            workers: int = 1) -> DetectionMask:
    """Classify every interior pixel of ``X``."""
    n, m = X.shape
    rows, cols = interior_shape(n, m, model.window)
    s, u, _ = network_features(X, model, block_size=block_size, workers=workers)
    features = np.column_stack([s / model.feature_scale, u / model.feature_scale])
    y = decide(features, model.output)
    return DetectionMask(y.reshape(rows, cols), model.window.half, (n, m))


# --------------------------------------------------------------------------
# model file


def model_to_json(model: ModelWeights) -> str:
    d = {
        "k": model.window.k,
        "summation_bias": model.summation.bias,
        "summation_weights": [float(x) for x in model.summation.weights],
        "bg_degree": model.background.degree,
        "bg_c0": model.background.c0,
        "bg_c1": model.background.c1,
        "bg_c2": model.background.c2,
        "bg_refit": model.bg_refit,
        "bg_robust": model.bg_robust,
        "bg_huber_delta": model.bg_huber_delta,
        "out_w0": model.output.w0,
        "out_ws": model.output.ws,
        "out_wu": model.output.wu,
        "feature_scale": model.feature_scale,
    }
    for key, value in d.items():
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError(f"model field {key} is not finite")
    return json.dumps(d, indent=2) + "\n"


def model_from_json(text: str) -> ModelWeights:
    try:
        d = json.loads(text)
        window = WindowConfig(int(d["k"]))
        model = ModelWeights(
            window=window,
            summation=SummationWeights(d["summation_weights"], d["summation_bias"]),
            background=BackgroundCoefficients(d["bg_c0"], d["bg_c1"], d["bg_c2"], int(d["bg_degree"])),
            output=OutputWeights(float(d["out_w0"]), float(d["out_ws"]), float(d["out_wu"])),
            feature_scale=float(d["feature_scale"]),
            bg_refit=bool(d.get("bg_refit", True)),
            bg_robust=bool(d.get("bg_robust", False)),
            bg_huber_delta=d.get("bg_huber_delta"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ShapeError):
            raise
        raise FormatError(f"invalid model file: {exc}") from exc
    return model


def save_model(model: ModelWeights, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> ModelWeights:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
