"""Deterministic sample generation on the slit tangent bundle.

Grids are reproducible by construction; random batches are seeded.  All y
vectors are unit length, and when a structure is supplied, points where its
norm dips below a floor are rejected so finite-difference stencils stay
inside the evaluation domain.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .geometry import Sample, f2_values

F_FLOOR = 0.1  # reject samples with F below this when a structure is given


def _unit_directions(dim, count):
    if dim == 2:
        # evenly spread angles, offset so no direction hits a coordinate axis
        offset = math.pi / (4.0 * count)
        return [
            (math.cos(2 * math.pi * k / count + offset),
             math.sin(2 * math.pi * k / count + offset))
            for k in range(count)
        ]
    if dim == 3:
        # Fibonacci sphere
        out = []
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for k in range(count):
            z = 1.0 - 2.0 * (k + 0.5) / count
            r = math.sqrt(max(0.0, 1.0 - z * z))
            th = golden * k
            out.append((r * math.cos(th), r * math.sin(th), z))
        return out
    rng = np.random.default_rng(1234 + dim)
    v = rng.normal(size=(count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return [tuple(row) for row in v]


def grid_samples(dim, box=1.0, points_per_axis=3, directions=8, structure=None,
                 params=None):
    """Cartesian x-grid times a fixed fan of unit y-directions."""
    axis = np.linspace(-box, box, points_per_axis)
    dirs = _unit_directions(dim, directions)
    samples = [
        Sample(x, y)
        for x in itertools.product(*([axis] * dim))
        for y in dirs
    ]
    if structure is not None:
        keep = f2_values(structure, samples, params) >= F_FLOOR * F_FLOOR
        samples = [s for s, k in zip(samples, keep) if k]
    return samples


def random_samples(dim, count, seed=0, box=1.0, structure=None, params=None):
    """Seeded batch: x uniform in the box, y uniform on the unit sphere."""
    rng = np.random.default_rng(seed)
    out = []
    guard = 0
    while len(out) < count:
        x = tuple(rng.uniform(-box, box, size=dim))
        y = rng.normal(size=dim)
        nrm = np.linalg.norm(y)
        if nrm < 1e-9:
            continue
        s = Sample(x, tuple(y / nrm))
        if structure is not None:
            if f2_values(structure, [s], params)[0] < F_FLOOR * F_FLOOR:
                guard += 1
                if guard > 100 * count:
                    raise ValueError("rejection sampling failed to find valid samples")
                continue
        out.append(s)
    return out
