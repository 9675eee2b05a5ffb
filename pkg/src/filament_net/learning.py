"""Training: background polynomial by (robust) least squares, threshold unit by
the perceptron rule.

The units are trained one after another rather than jointly. The summation
unit keeps unit weights; the background unit is a least-squares polynomial in
the normalized scan index fitted to the window sums; the threshold unit is a
perceptron on the scaled pair ``(s, u)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DegenerateTrainingSet, NumericalError, ShapeError
from .image_io import ImageFragment, LabelMask
from .network import (
    BackgroundCoefficients,
    ModelWeights,
    OutputWeights,
    SummationWeights,
    background_curve,
    decide,
    hidden_sum,
    normalize_index,
)
from .windowing import WindowConfig, build_columns

__all__ = [
    "FitReport",
    "PerceptronConfig",
    "PerceptronResult",
    "TrainingSet",
    "fit_background",
    "fit_background_robust",
    "estimate_background",
    "huber_weights",
    "mad_scale",
    "build_training_set",
    "train_perceptron",
    "training_error",
    "train",
]

HUBER_TUNING = 1.345
COEF_TOL = 1e-9


@dataclass(frozen=True)
class FitReport:
    coefficients: BackgroundCoefficients
    rms_residual: float
    iterations: int = 1
    reweighted: bool = False


@dataclass(frozen=True)
class PerceptronConfig:
    learning_rate: float = 0.1
    max_epochs: int = 200
    shuffle_seed: int = 0
    early_stop: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Scaled features ``(s/scale, u/scale)`` with binary targets, one row per window."""

    features: np.ndarray
    targets: np.ndarray
    scale: float
    fit: FitReport | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        t = np.asarray(self.targets)
        if x.ndim != 2 or x.shape[1] != 2:
            raise ShapeError(f"features must have shape (h, 2), got {x.shape}")
        if t.shape != (x.shape[0],):
            raise ShapeError(f"{x.shape[0]} feature rows but {t.shape} targets")
        if not np.isin(t, (0, 1)).all():
            raise ValueError("targets must be 0 or 1")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "targets", t.astype(np.int64))

    def __len__(self):
        return self.targets.size


@dataclass(frozen=True)
class PerceptronResult:
    weights: OutputWeights
    errors: int
    epochs: int
    history: tuple[int, ...] = field(default=(), repr=False)


# --------------------------------------------------------------------------
# background fit


def _basis(q: int, degree: int) -> np.ndarray:
    t = np.asarray(normalize_index(np.arange(1, q + 1), q), dtype=float)
    return np.vander(t, degree + 1, increasing=True)


def _solve_normal(B: np.ndarray, s: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
    Bw = B if w is None else B * w[:, None]
    A = Bw.T @ B
    b = Bw.T @ s
    try:
        c = np.linalg.solve(A, b)
        # one refinement step keeps the residual orthogonal to ~machine precision
        c = c + np.linalg.solve(A, b - A @ c)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular normal matrix: {exc}") from exc
    if not np.all(np.isfinite(c)):
        raise NumericalError("non-finite background coefficients")
    return c


def _as_coefficients(c: np.ndarray, degree: int) -> BackgroundCoefficients:
    c2 = c[2] if degree == 2 else 0.0
    return BackgroundCoefficients(c[0], c[1], c2, degree)


def _check(s, degree: int) -> np.ndarray:
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    s = np.asarray(s, dtype=float).ravel()
    if s.size < degree + 1:
        raise ShapeError(f"need at least {degree + 1} samples for a degree-{degree} fit, got {s.size}")
    return s


def fit_background(s, degree: int = 2) -> FitReport:
    """Ordinary least-squares polynomial in the normalized scan index."""
    s = _check(s, degree)
    B = _basis(s.size, degree)
    c = _solve_normal(B, s)
    res = s - B @ c
    return FitReport(_as_coefficients(c, degree), float(np.sqrt(np.mean(res * res))))


def mad_scale(res: np.ndarray) -> float:
    """Normal-consistent median absolute deviation."""
    return float(np.median(np.abs(res - np.median(res))) / 0.6744897501960817)


def huber_weights(res: np.ndarray, delta: float) -> np.ndarray:
    a = np.abs(res)
    w = np.ones_like(a)
    big = a > delta
    w[big] = delta / a[big]
    return w


def fit_background_robust(s, degree: int = 2, huber_delta: float | None = None,
                          max_iters: int = 10) -> FitReport:
    """Huber IRLS starting from the OLS fit.

    With ``huber_delta=None`` the cutoff is re-estimated each pass as
    ``1.345 * MAD`` of the current residuals. Iteration 1 is plain OLS; the
    loop stops after ``max_iters`` passes or once no coefficient moves by
    more than 1e-9.
    """
    if huber_delta is not None and not huber_delta > 0:
        raise ValueError("huber_delta must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    s = _check(s, degree)
    B = _basis(s.size, degree)
    c = _solve_normal(B, s)
    iterations, reweighted = 1, False
    while iterations < max_iters:
        res = s - B @ c
        delta = huber_delta if huber_delta is not None else HUBER_TUNING * mad_scale(res)
        if not delta > 0:
            break  # majority fitted exactly
        w = huber_weights(res, delta)
        if np.all(w == 1.0):
            break
        new = _solve_normal(B, s, w)
        iterations += 1
        reweighted = True
        change = np.max(np.abs(new - c))
        c = new
        if change < COEF_TOL:
            break
    res = s - B @ c
    return FitReport(_as_coefficients(c, degree), float(np.sqrt(np.mean(res * res))),
                     iterations, reweighted)


def estimate_background(s, degree: int = 2, *, robust: bool = False,
                        huber_delta: float | None = None, max_iters: int = 10) -> FitReport:
    if robust:
        return fit_background_robust(s, degree, huber_delta, max_iters)
    return fit_background(s, degree)


# --------------------------------------------------------------------------
# output unit


def build_training_set(X: ImageFragment, mask: LabelMask, cfg: WindowConfig, degree: int = 2, *,
                       robust: bool = False, huber_delta: float | None = None) -> TrainingSet:
    if mask.shape != X.shape:
        raise ShapeError(
            f"mask is {mask.height}x{mask.width} but image is {X.height}x{X.width}"
        )
    targets = mask.interior(cfg.k).ravel().astype(np.int64)
    n_fil = int(targets.sum())
    if n_fil == 0 or n_fil == targets.size:
        raise DegenerateTrainingSet(
            "training interior contains a single class "
            f"({n_fil} filament of {targets.size} pixels)"
        )
    cols = build_columns(X, cfg)
    s = hidden_sum(cols.data, SummationWeights.unit(cfg.r))
    fit = estimate_background(s, degree, robust=robust, huber_delta=huber_delta)
    u = background_curve(fit.coefficients, s.size)
    scale = float(cfg.r * 255)
    return TrainingSet(np.column_stack([s / scale, u / scale]), targets, scale, fit)


@njit(cache=True)
def _perceptron_epoch(x, t, order, w, lr):
    updates = 0
    for idx in order:
        act = w[1] * x[idx, 0] + w[2] * x[idx, 1]
        y = 1 if act >= w[0] else 0
        d = t[idx] - y
        if d != 0:
            w[1] += lr * d * x[idx, 0]
            w[2] += lr * d * x[idx, 1]
            w[0] -= lr * d
            updates += 1
    return updates


def training_error(ts: TrainingSet, w: OutputWeights) -> int:
    """Number of misclassified training rows."""
    return int(np.count_nonzero(decide(ts.features, w) != ts.targets.astype(bool)))


def train_perceptron(ts: TrainingSet, cfg: PerceptronConfig = PerceptronConfig()) -> PerceptronResult:
    """Perceptron rule from zero weights, keeping the best epoch-end snapshot.

    Rows are visited in a fresh permutation every epoch, drawn from a
    generator seeded with ``cfg.shuffle_seed``.
    """
    x = np.ascontiguousarray(ts.features)
    t = ts.targets
    if len(ts) == 0:
        raise DegenerateTrainingSet("empty training set")
    rng = np.random.default_rng(cfg.shuffle_seed)
    w = np.zeros(3)
    best = OutputWeights(0.0, 0.0, 0.0)
    best_err = training_error(ts, best)
    history = [best_err]
    epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(ts))
        updates = _perceptron_epoch(x, t, order, w, cfg.learning_rate)
        epochs = epoch
        current = OutputWeights(float(w[0]), float(w[1]), float(w[2]))
        err = training_error(ts, current)
        history.append(err)
        if err < best_err:
            best, best_err = current, err
        if cfg.early_stop and updates == 0:
            break
    return PerceptronResult(best, best_err, epochs, tuple(history))


def train(X: ImageFragment, mask: LabelMask, cfg: WindowConfig = WindowConfig(),
          pcfg: PerceptronConfig = PerceptronConfig(), robust: bool = True, *, degree: int = 2,
          huber_delta: float | None = None, bg_refit: bool = True) -> ModelWeights:
    """Fit the background unit on ``X`` and train the threshold unit on ``mask``."""
    ts = build_training_set(X, mask, cfg, degree, robust=robust, huber_delta=huber_delta)
    result = train_perceptron(ts, pcfg)
    if result.weights.ws == 0.0 and result.weights.wu == 0.0:
        raise NumericalError("perceptron left both feature weights at zero")
    return ModelWeights(
        window=cfg,
        summation=SummationWeights.unit(cfg.r),
        background=ts.fit.coefficients,
        output=result.weights,
        feature_scale=ts.scale,
        bg_refit=bg_refit,
        bg_robust=robust,
        bg_huber_delta=huber_delta,
    )
