"""Filament recognition with a three-unit network: window sums, a polynomial
background trend, and a perceptron-trained threshold."""

from .errors import DegenerateTrainingSet, FilamentError, FormatError, NumericalError, ShapeError
from .image_io import DetectionMask, ImageFragment, LabelMask, load_image, load_mask, save_image, save_mask
from .learning import (
    FitReport,
    PerceptronConfig,
    TrainingSet,
    build_training_set,
    fit_background,
    fit_background_robust,
    train,
    train_perceptron,
)
from .metrics import Confusion, Score, score
from .network import (
    BackgroundCoefficients,
    ModelWeights,
    OutputWeights,
    SummationWeights,
    forward,
    load_model,
    save_model,
)
from .synthgen import CorpusRanges, Filament, SynthParams, corpus, generate
from .windowing import ColumnMatrix, WindowConfig, build_columns, center_of

__version__ = "0.1.0"
