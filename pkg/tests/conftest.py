"""Shared fixtures. The field-solver runs are the expensive part of the
suite, so every scene that more than one test needs is run exactly once per
session and the records are shared."""

from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from pixelpatch.bench import design_standard_patch, hammerstad_resonance
from pixelpatch.emcore import (MaterialStack, build_scene, rogers_like, run_fdtd,
                               thru_scene)
from pixelpatch.grid import make_grid, random_grid, repair_floating
from pixelpatch.sparam import extract_sparams


@dataclass
class SceneBundle:
    scene: object
    runs: list
    sset: object
    elapsed: float
    extra: dict


@pytest.fixture(scope="session")
def stack() -> MaterialStack:
    return rogers_like()


@pytest.fixture(scope="session")
def thru_bundle(stack):
    """Matched-load validation scene: two ports bridged by a ~50 ohm strip."""
    scene = thru_scene(stack, dx=0.65e-3)
    t0 = time.perf_counter()
    runs = [run_fdtd(scene, 1, 20000), run_fdtd(scene, 2, 20000)]
    sset = extract_sparams(runs)
    return SceneBundle(scene, runs, sset, time.perf_counter() - t0, {})


@pytest.fixture(scope="session")
def patch15_bundle(stack):
    """Resonance-oracle scene: all-ones pair rasterized at 15 pixels across
    the synthesized width, 2 cells/pixel, loosely spaced so the element's
    own mode dominates."""
    dims = design_standard_patch(5.4e9, stack.eps_r, stack.h)
    nx = 15
    pitch = dims.W / nx
    ny = max(1, round(dims.L / pitch))
    f_oracle = hammerstad_resonance(nx * pitch, ny * pitch, stack.eps_r, stack.h)
    grid = make_grid(nx, ny, 1, pitch=pitch)
    scene = build_scene(grid, grid, 20e-3, stack, 2, feed_len_cells=2)
    t0 = time.perf_counter()
    run = run_fdtd(scene, 1, 20000)
    elapsed = time.perf_counter() - t0
    sset = extract_sparams([run], symmetric=True)
    return SceneBundle(scene, [run], sset, elapsed,
                       {"f_oracle": f_oracle, "dims": dims, "grid": grid})


@pytest.fixture(scope="session")
def allones8_bundle(stack):
    """The end-to-end baseline: all-ones 8x8 pair at the default pitch and
    spacing, both ports excited."""
    grid = make_grid(8, 8, 1, pitch=2.29e-3)
    scene = build_scene(grid, grid, 5e-3, stack, 2)
    t0 = time.perf_counter()
    runs = [run_fdtd(scene, 1, 20000), run_fdtd(scene, 2, 20000)]
    elapsed = time.perf_counter() - t0
    sset = extract_sparams(runs)
    return SceneBundle(scene, runs, sset, elapsed, {"grid": grid})


@pytest.fixture(scope="session")
def asym8_bundle(stack):
    """Asymmetric pair (all-ones vs a random repaired grid): the honest
    reciprocity exercise, since symmetric pairs satisfy it by construction."""
    a = make_grid(8, 8, 1, pitch=2.29e-3)
    b = repair_floating(random_grid(8, 8, 0.55, seed=20, pitch=2.29e-3))
    scene = build_scene(a, b, 5e-3, stack, 2)
    t0 = time.perf_counter()
    runs = [run_fdtd(scene, 1, 20000), run_fdtd(scene, 2, 20000)]
    sset = extract_sparams(runs)
    return SceneBundle(scene, runs, sset, time.perf_counter() - t0, {})
