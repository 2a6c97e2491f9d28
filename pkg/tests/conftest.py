"""Shared fixtures and a disk cache for expensive solver results.

Threshold searches take minutes to hours; their results are deterministic
functions of the solver configuration, so they are memoized in
``tests/_cache.json`` keyed by every parameter that enters the computation.
Delete that file to force full recomputation.
"""

import json
import time
from pathlib import Path

import pytest

from pullin import Grid, Tolerances, bifurcation_curve, find_static_pullin

_CACHE_PATH = Path(__file__).parent / "_cache.json"


def cached(key: str, fn):
    """Memoize fn() under key in the on-disk JSON cache."""
    cache = {}
    if _CACHE_PATH.exists():
        cache = json.loads(_CACHE_PATH.read_text())
    if key in cache:
        return cache[key]["value"]
    t0 = time.time()
    value = fn()
    # merge with whatever landed on disk while fn() ran, then swap atomically
    if _CACHE_PATH.exists():
        cache = json.loads(_CACHE_PATH.read_text())
    cache[key] = {"value": value, "wall_s": round(time.time() - t0, 1)}
    tmp = _CACHE_PATH.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(cache, indent=1, sort_keys=True))
    tmp.replace(_CACHE_PATH)
    return value


@pytest.fixture(scope="session")
def bifurcation_eps02():
    """Pull-in value and bifurcation curve for eps = 0.2 on the coarse grid."""
    grid = Grid(100, 50)
    tol = Tolerances(bisect_tol=1e-4)
    lam_star = cached("pullin_static/eps=0.2/grid=100x50/tol=1e-4",
                      lambda: find_static_pullin(0.2, grid, tol))
    points = cached("bifurcation/eps=0.2/grid=100x50/n=16/tol=1e-4",
                    lambda: bifurcation_curve(0.2, grid, 16, tol))
    points = [(float(lam), float(u0), str(tag)) for lam, u0, tag in points]
    return lam_star, points
