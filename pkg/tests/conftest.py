import numpy as np
import pytest

from vemlattice.mesh import DomainSpec, clipped_voronoi, tessellation_to_mesh


def random_convex(rng, n=None):
    n = n or int(rng.integers(3, 10))
    th = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.max(np.diff(np.r_[th, th[0] + 2 * np.pi])) > 0.9 * np.pi or np.min(np.diff(th)) < 0.05:
        th = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(0.5, 2.0)
    c = rng.uniform(-3, 3, 2)
    return c + r * np.column_stack([np.cos(th), np.sin(th)])


def random_star(rng, n=None):
    """Star-shaped, generally nonconvex polygon (CCW)."""
    n = n or int(rng.integers(5, 14))
    th = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.min(np.diff(np.r_[th, th[0] + 2 * np.pi])) < 0.08:
        th = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(0.4, 1.5, n)
    c = rng.uniform(-3, 3, 2)
    return c + r[:, None] * np.column_stack([np.cos(th), np.sin(th)])


def random_with_hole(rng):
    """Regular-ish outer ring with a smaller clockwise hole inside."""
    n = int(rng.integers(4, 10))
    th = 2 * np.pi * np.arange(n) / n + rng.uniform(0, 0.3)
    c = rng.uniform(-2, 2, 2)
    outer = c + 2.0 * np.column_stack([np.cos(th), np.sin(th)])
    m = int(rng.integers(3, 7))
    ph = 2 * np.pi * np.arange(m) / m + rng.uniform(0, 1)
    hole = c + rng.uniform(-0.3, 0.3, 2) + rng.uniform(0.3, 0.8) * np.column_stack(
        [np.cos(ph), np.sin(ph)])
    return [outer, hole[::-1]]


def random_elements(count=200, seed=12345):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            out.append(("convex", [random_convex(rng)]))
        elif kind == 1:
            out.append(("nonconvex", [random_star(rng)]))
        else:
            out.append(("hole", random_with_hole(rng)))
    return out


@pytest.fixture(scope="session")
def quadrant_mesh():
    domain = DomainSpec.rectangle()
    seeds = np.array([[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]])
    return tessellation_to_mesh(clipped_voronoi(seeds, domain))
