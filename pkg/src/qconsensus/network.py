"""Random geometric sensor graphs and consensus weight matrices.

Randomness comes from numpy's PCG64 bit generator (``np.random.default_rng``),
so a seed reproduces the same graph on every platform numpy supports.
"""
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from qconsensus.errors import ParameterOutOfRange
from qconsensus.spectral import SpectralSummary, spectral_summary, symmetric_eigenvalues

STOCHASTIC_TOL = 1e-10


@dataclass(frozen=True)
class Graph:
    m: int
    positions: np.ndarray
    edges: tuple
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        edges = tuple(sorted((min(i, j), max(i, j)) for i, j in self.edges))
        deg = np.zeros(self.m, dtype=int)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"edge {(i, j)} out of range for m={self.m}")
            deg[i] += 1
            deg[j] += 1
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        pos = np.array(self.positions, dtype=float).reshape(self.m, 2)
        pos.setflags(write=False)
        deg.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "degrees", deg)

    def neighbors(self, i):
        return sorted({b if a == i else a for a, b in self.edges if i in (a, b)})

    def adjacency(self):
        a = np.zeros((self.m, self.m))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def to_json(self):
        return json.dumps({
            "m": self.m,
            "positions": self.positions.tolist(),
            "edges": [list(e) for e in self.edges],
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(m=int(d["m"]), positions=d["positions"], edges=tuple(tuple(e) for e in d["edges"]))


def default_radius(m):
    return math.sqrt(math.log(m) / m)


def generate_rgg(m, radius, seed):
    """Uniform points in the unit square, edges between pairs closer than ``radius``."""
    if m < 2:
        raise ParameterOutOfRange("m must be at least 2")
    if radius < 0 or radius > math.sqrt(2):
        raise ParameterOutOfRange(f"radius {radius} outside [0, sqrt(2)]")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, 1.0, size=(m, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    ii, jj = np.nonzero(np.triu(dist < radius, k=1))
    return Graph(m=m, positions=pos, edges=tuple(zip(ii.tolist(), jj.tolist())))


def path_graph(m):
    pos = np.column_stack([np.linspace(0.0, 1.0, m), np.zeros(m)])
    return Graph(m=m, positions=pos, edges=tuple((i, i + 1) for i in range(m - 1)))


def complete_graph(m):
    angles = 2 * np.pi * np.arange(m) / m
    pos = 0.5 + 0.5 * np.column_stack([np.cos(angles), np.sin(angles)])
    return Graph(m=m, positions=pos, edges=tuple((i, j) for i in range(m) for j in range(i + 1, m)))


def is_connected(g):
    if g.m == 0:
        return False
    adj = [[] for _ in range(g.m)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == g.m


def attempt_seed(seed, attempt):
    """Seed for the ``attempt``-th redraw of a disconnected graph."""
    if attempt == 0:
        return seed
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1, np.uint64)[0])


def connected_rgg(m, radius, seed, max_attempts=10_000):
    """Draw RGGs until one is connected. Returns ``(graph, rejections)``."""
    for attempt in range(max_attempts):
        g = generate_rgg(m, radius, attempt_seed(seed, attempt))
        if is_connected(g):
            return g, attempt
    raise RuntimeError(f"no connected graph in {max_attempts} draws (m={m}, radius={radius})")


@dataclass(frozen=True)
class WeightMatrix:
    w: np.ndarray
    summary: SpectralSummary

    @property
    def m(self):
        return self.w.shape[0]

    @property
    def lambda2(self):
        return self.summary.lambda2

    @property
    def lambda_min(self):
        return self.summary.lambda_min

    @classmethod
    def from_array(cls, w):
        w = np.array(w, dtype=float)
        w.setflags(write=False)
        return cls(w=w, summary=spectral_summary(w))


def metropolis_weights(g):
    d = g.degrees
    w = np.zeros((g.m, g.m))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
    w[np.diag_indices(g.m)] = 1.0 - w.sum(axis=1)
    return WeightMatrix.from_array(w)


def laplacian_weights(g, a=None):
    """W = I - aL; ``a`` defaults to 0.99 / d_max."""
    d_max = int(np.max(g.degrees)) if g.m else 0
    if d_max == 0:
        raise ParameterOutOfRange("graph has no edges")
    if a is None:
        a = 0.99 / d_max
    if not 0.0 < a < 1.0 / d_max:
        raise ParameterOutOfRange(f"a={a} must lie in (0, 1/d_max) = (0, {1.0 / d_max})")
    lap = np.diag(g.degrees.astype(float)) - g.adjacency()
    return WeightMatrix.from_array(np.eye(g.m) - a * lap)


@dataclass(frozen=True)
class ValidationReport:
    row_stochastic: bool
    column_stochastic: bool
    spectral_gap: bool
    symmetric: bool
    lambda2: float

    @property
    def ok(self):
        return self.row_stochastic and self.column_stochastic and self.spectral_gap and self.symmetric


def validate_consensus_matrix(w, tol=STOCHASTIC_TOL):
    w = np.asarray(getattr(w, "w", w), dtype=float)
    m = w.shape[0]
    ones = np.ones(m)
    row = bool(np.max(np.abs(w @ ones - ones)) <= tol)
    col = bool(np.max(np.abs(ones @ w - ones)) <= tol)
    sym = bool(np.max(np.abs(w - w.T)) <= tol)
    dev = w - np.full((m, m), 1.0 / m)
    if sym:
        lambda2 = float(np.max(np.abs(symmetric_eigenvalues(0.5 * (dev + dev.T)))))
    else:
        lambda2 = float(np.max(np.abs(np.linalg.eigvals(dev))))
    return ValidationReport(row, col, bool(lambda2 < 1.0 - tol), sym, lambda2)
