"""Coordinate charts and deterministic sampling.

A chart is a closed coordinate box plus a list of excluded loci (fields
whose zero sets sampling must avoid).  Sampling is reproducible: a fixed
PRNG seed draws uniform points in the box and rejects any point at which
some excluded-locus field is smaller than the margin in absolute value
(the field value standing in for distance to the locus).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import SkewricError

DEFAULT_SEED = 24389
DEFAULT_N_POINTS = 100
LOCUS_MARGIN = 1e-3


def _sample_box(box, excluded, n, seed, margin):
    box = np.asarray(box, dtype=np.float64)
    rng = np.random.default_rng(seed)
    dim = box.shape[0]
    locus_ev = ex.Evaluator(excluded) if excluded else None
    points = np.empty((0, dim))
    for _ in range(200):
        draw = rng.uniform(box[:, 0], box[:, 1], size=(4 * n, dim))
        if locus_ev is not None:
            vals = locus_ev.at_many(draw)
            keep = np.all(np.abs(vals) >= margin, axis=0)
            draw = draw[keep]
        points = np.vstack([points, draw])
        if len(points) >= n:
            return points[:n]
    raise SkewricError("could not sample enough points off the excluded loci")


@dataclass(frozen=True)
class Chart2:
    """Plane chart with coordinates (y1, y2)."""

    box: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    excluded: tuple = ()

    variables = ("y1", "y2")

    def sample(self, n=DEFAULT_N_POINTS, seed=DEFAULT_SEED, margin=LOCUS_MARGIN):
        return _sample_box(self.box, list(self.excluded), n, seed, margin)

    def contains(self, point):
        (a, b), (c, d) = self.box
        return a <= point[0] <= b and c <= point[1] <= d

    def parse(self, text):
        return ex.parse(text, self.variables)


@dataclass(frozen=True)
class Chart4:
    """Chart on the total space of the plane cotangent bundle, with base
    coordinates (y1, y2) and fibre coordinates (x1, x2)."""

    box: tuple = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    excluded: tuple = ()

    variables = ("y1", "y2", "x1", "x2")

    def sample(self, n=DEFAULT_N_POINTS, seed=DEFAULT_SEED, margin=LOCUS_MARGIN):
        return _sample_box(self.box, list(self.excluded), n, seed, margin)

    def parse(self, text):
        return ex.parse(text, self.variables)

    @property
    def base(self):
        return Chart2(box=self.box[:2], excluded=self.excluded)


def chart4_over(chart2, fibre_box=((-1.0, 1.0), (-1.0, 1.0))):
    """Extend a plane chart by a fibre box."""
    return Chart4(box=tuple(chart2.box) + tuple(fibre_box), excluded=chart2.excluded)
