"""Seeded synthetic fragments: dark elongated filaments on smooth gradients.

A fragment is built as

    pixel = clip(round(B(x, y) - depth * inside + noise), 1, 255)

where ``B`` is a quadratic in normalized coordinates ``x = col / (m - 1)`` and
``y = row / (n - 1)``, ``inside`` flags pixels whose centre lies within
``half_width`` of a filament polyline, and ``noise`` is zero-mean Gaussian.
The label mask is exactly ``inside``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .image_io import ImageFragment, LabelMask

__all__ = [
    "Filament",
    "SynthParams",
    "CorpusRanges",
    "background_field",
    "filament_field",
    "filament_masks",
    "generate",
    "derive_seeds",
    "corpus_params",
    "corpus",
]


@dataclass(frozen=True)
class Filament:
    """Polyline of ``(row, col)`` vertices in pixel units, plus thickness and darkness."""

    points: tuple[tuple[float, float], ...]
    half_width: float = 2.0
    depth: float = 40.0

    def __post_init__(self):
        pts = tuple((float(r), float(c)) for r, c in self.points)
        if not pts:
            raise ValueError("filament needs at least one vertex")
        if not self.depth > 0:
            raise ValueError(f"filament depth must be positive, got {self.depth}")
        if not self.half_width >= 1:
            raise ValueError(f"filament half-width must be >= 1, got {self.half_width}")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class SynthParams:
    n: int = 256
    m: int = 256
    # b0, bx, by, bxx, byy
    background: tuple[float, float, float, float, float] = (150.0, 0.0, 0.0, 0.0, 0.0)
    filaments: tuple[Filament, ...] = ()
    noise_sigma: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"fragment dimensions must be positive, got {self.n}x{self.m}")
        bg = tuple(float(b) for b in self.background)
        if len(bg) != 5:
            raise ValueError("background needs five coefficients (b0, bx, by, bxx, byy)")
        if not 1 <= bg[0] <= 255:
            raise ValueError(f"background level b0 must lie in 1..255, got {bg[0]}")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be non-negative")
        object.__setattr__(self, "background", bg)
        object.__setattr__(self, "filaments", tuple(self.filaments))


def _coords(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    y = np.arange(n, dtype=float)[:, None] / max(n - 1, 1)
    x = np.arange(m, dtype=float)[None, :] / max(m - 1, 1)
    return x, y


def background_field(p: SynthParams) -> np.ndarray:
    """Noise-free background brightness ``B`` on the ``n x m`` grid."""
    b0, bx, by, bxx, byy = p.background
    x, y = _coords(p.n, p.m)
    return b0 + bx * x + by * y + bxx * x * x + byy * y * y


def _segment_distance(rr: np.ndarray, cc: np.ndarray, a, b) -> np.ndarray:
    (r0, c0), (r1, c1) = a, b
    dr, dc = r1 - r0, c1 - c0
    L2 = dr * dr + dc * dc
    if L2 == 0.0:
        return np.hypot(rr - r0, cc - c0)
    s = np.clip(((rr - r0) * dr + (cc - c0) * dc) / L2, 0.0, 1.0)
    return np.hypot(rr - (r0 + s * dr), cc - (c0 + s * dc))


def polyline_distance(points, n: int, m: int) -> np.ndarray:
    rr = np.arange(n, dtype=float)[:, None]
    cc = np.arange(m, dtype=float)[None, :]
    if len(points) == 1:
        return _segment_distance(rr, cc, points[0], points[0])
    d = np.full((n, m), np.inf)
    for a, b in zip(points[:-1], points[1:]):
        d = np.minimum(d, _segment_distance(rr, cc, a, b))
    return d


def filament_masks(p: SynthParams) -> list[np.ndarray]:
    """One boolean mask per filament, in the order of ``p.filaments``."""
    return [polyline_distance(f.points, p.n, p.m) <= f.half_width for f in p.filaments]


def filament_field(p: SynthParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel brightness decrement and the boolean filament mask."""
    dip = np.zeros((p.n, p.m))
    for fil, inside in zip(p.filaments, filament_masks(p)):
        dip = np.where(inside, np.maximum(dip, fil.depth), dip)
    return dip, dip > 0


def generate(p: SynthParams) -> tuple[ImageFragment, LabelMask]:
    rng = np.random.default_rng(p.seed)
    dip, inside = filament_field(p)
    values = background_field(p) - dip
    if p.noise_sigma > 0:
        values = values + rng.normal(0.0, p.noise_sigma, size=(p.n, p.m))
    pixels = np.clip(np.rint(values), 1, 255).astype(np.uint8)
    return ImageFragment(pixels), LabelMask(inside)


# --------------------------------------------------------------------------
# corpora


@dataclass(frozen=True)
class CorpusRanges:
    """Uniform sampling ranges for per-fragment randomisation.

    ``vertical_span`` is the range of the magnitude of the linear top-to-bottom
    brightness change, whose sign is drawn at random; ``horizontal_span`` is
    the signed left-to-right change and ``curvature`` the range of the
    quadratic ``byy`` term. Horizontal drift is kept small because the
    background unit sees the image as one row-major sequence and cannot follow
    a left-right trend inside each row.
    """

    level: tuple[float, float] = (145.0, 165.0)
    vertical_span: tuple[float, float] = (20.0, 40.0)
    horizontal_span: tuple[float, float] = (-6.0, 6.0)
    curvature: tuple[float, float] = (-15.0, 15.0)
    depth: tuple[float, float] = (40.0, 50.0)
    half_width: tuple[float, float] = (2.0, 4.0)
    filaments: tuple[int, int] = (1, 1)
    vertices: tuple[int, int] = (3, 5)
    length_fraction: tuple[float, float] = (0.45, 0.8)

    def __post_init__(self):
        if self.depth[0] <= 0:
            raise ValueError(f"filament depth range must be positive, got {self.depth}")
        if self.half_width[0] < 1:
            raise ValueError(f"half-width range must start at >= 1, got {self.half_width}")
        if self.filaments[0] < 0 or self.filaments[1] < self.filaments[0]:
            raise ValueError(f"invalid filament count range {self.filaments}")


def derive_seeds(seed: int, count: int) -> list[int]:
    """Per-fragment seeds; the i-th seed does not depend on ``count``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def random_filament(rng: np.random.Generator, region: tuple[float, float, float, float],
                    ranges: CorpusRanges) -> Filament:
    """An elongated, gently bending polyline centred inside ``region``.

    ``region`` is ``(row0, row1, col0, col1)`` in pixel units; the filament
    length is drawn relative to the region's shorter side.
    """
    r0, r1, c0, c1 = region
    size = min(r1 - r0, c1 - c0)
    length = rng.uniform(*ranges.length_fraction) * size
    theta = rng.uniform(0.0, np.pi)
    centre = np.array([r0 + rng.uniform(0.3, 0.7) * (r1 - r0), c0 + rng.uniform(0.3, 0.7) * (c1 - c0)])
    direction = np.array([np.sin(theta), np.cos(theta)])
    normal = np.array([-direction[1], direction[0]])
    nv = int(rng.integers(ranges.vertices[0], ranges.vertices[1] + 1))
    along = np.linspace(-0.5, 0.5, nv) * length
    bend = rng.uniform(-0.08, 0.08, nv) * length
    pts = centre + along[:, None] * direction + bend[:, None] * normal
    return Filament(
        tuple(map(tuple, pts)),
        half_width=float(rng.uniform(*ranges.half_width)),
        depth=float(rng.uniform(*ranges.depth)),
    )


def _cells(count: int, n: int, m: int) -> list[tuple[float, float, float, float]]:
    """Split the fragment into a near-square grid with at least ``count`` cells."""
    cols = int(np.ceil(np.sqrt(count)))
    rows = int(np.ceil(count / cols))
    h, w = (n - 1) / rows, (m - 1) / cols
    return [(a * h, (a + 1) * h, b * w, (b + 1) * w) for a in range(rows) for b in range(cols)][:count]


def fragment_params(seed: int, base: SynthParams, ranges: CorpusRanges) -> SynthParams:
    """Randomised parameters for one corpus member, drawn from ``seed`` alone."""
    rng = np.random.default_rng([seed, 1])
    level = rng.uniform(*ranges.level)
    by = rng.uniform(*ranges.vertical_span) * rng.choice((-1.0, 1.0))
    bx = rng.uniform(*ranges.horizontal_span)
    byy = rng.uniform(*ranges.curvature)
    # keep the fragment mean near ``level`` whatever the gradient terms
    b0 = level - by / 2 - bx / 2 - byy / 3
    count = int(rng.integers(ranges.filaments[0], ranges.filaments[1] + 1))
    filaments = tuple(random_filament(rng, cell, ranges) for cell in _cells(count, base.n, base.m))
    return replace(base, background=(b0, bx, by, 0.0, byy), filaments=filaments, seed=seed)


def corpus_params(count: int, base: SynthParams = SynthParams(), seed: int = 0,
                  ranges: CorpusRanges = CorpusRanges()) -> list[SynthParams]:
    if count < 1:
        raise ValueError("corpus count must be at least 1")
    return [fragment_params(s, base, ranges) for s in derive_seeds(seed, count)]


def corpus(count: int, base: SynthParams = SynthParams(), seed: int = 0,
           ranges: CorpusRanges = CorpusRanges()) -> list[tuple[ImageFragment, LabelMask]]:
    return [generate(p) for p in corpus_params(count, base, seed, ranges)]
