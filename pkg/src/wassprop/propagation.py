"""Alternating barycenter label propagation on hypergraphs.

Labels alternate between hyperedges and vertices: each hyperedge takes the
weighted barycenter of its members' labels, then each vertex takes the
weighted barycenter of its incident hyperedges' labels (with its target label
appended as a gamma-weighted anchor when the vertex is known).  Known
vertices additionally carry weight alpha inside hyperedge barycenters.

Both label backends embed labels into a Euclidean vector space in which the
barycenter is a plain weighted average and the squared transport distance is
a scaled squared norm, so each phase is exact and fully vectorized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import norm

from .errors import InputError
from .hypergraph import Hypergraph
from .labels import DiagGaussianLabel, QuantileGrid, QuantileLabel

DEFAULT_MAX_ITERS = 200
DEFAULT_REL_TOL = 1e-6


@dataclass(frozen=True)
class PropagationConfig:
    """Algorithm parameters: known-vertex weight alpha inside hyperedge
    barycenters, anchor weight gamma at vertex updates, loop limits, seed."""

    alpha: float
    gamma: float
    max_iters: int = DEFAULT_MAX_ITERS
    rel_tol: float = DEFAULT_REL_TOL
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 1:
            raise InputError(f"alpha must be >= 1, got {self.alpha}")
        if self.gamma <= 0:
            raise InputError(f"gamma must be positive, got {self.gamma}")
        if self.max_iters < 1:
            raise InputError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol <= 0:
            raise InputError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.seed < 0:
            raise InputError(f"seed must be non-negative, got {self.seed}")


class QuantileBackend:
    """Quantile labels as vectors of grid samples.

    Weighted vector averages realize the exact barycenter, and the squared
    transport distance is the grid quadrature (1/S) * ||x - y||^2.
    """

    def __init__(self, grid: QuantileGrid):
        self.grid = grid
        self.dim = grid.size
        self.metric_scale = 1.0 / grid.size

    def encode(self, label: QuantileLabel) -> np.ndarray:
        if label.grid.size != self.grid.size:
            raise InputError("label grid does not match backend grid")
        return np.array(label.values)

    def decode(self, vec: np.ndarray) -> QuantileLabel:
        return QuantileLabel(self.grid, vec)

    def random_init(self, rng: np.random.Generator, anchors: Sequence[QuantileLabel]) -> np.ndarray:
        # standard Gaussian shape with a uniformly drawn mean in [-1, 1]
        return norm.ppf(self.grid.nodes) + rng.uniform(-1.0, 1.0)

    def mean_stats(self, vec: np.ndarray) -> np.ndarray:
        return np.array([vec.mean()])


class GaussianBackend:
    """Diagonal Gaussians as concatenated (mean, std) vectors.

    Averaging the concatenation averages means and stds coordinate-wise, and
    the squared norm of a difference is the closed-form squared distance.
    """

    def __init__(self, dim: int, init_std: Optional[np.ndarray] = None):
        if dim < 1:
            raise InputError(f"Gaussian dimension must be >= 1, got {dim}")
        self.b = dim
        self.dim = 2 * dim
        self.metric_scale = 1.0
        self.init_std = None if init_std is None else np.asarray(init_std, dtype=float)

    def encode(self, label: DiagGaussianLabel) -> np.ndarray:
        if label.dim != self.b:
            raise InputError(f"label dimension {label.dim} does not match backend {self.b}")
        return np.concatenate([label.mean, label.std])

    def decode(self, vec: np.ndarray) -> DiagGaussianLabel:
        return DiagGaussianLabel(vec[: self.b], np.maximum(vec[self.b:], 0.0))

    def random_init(self, rng: np.random.Generator, anchors: Sequence[DiagGaussianLabel]) -> np.ndarray:
        std = self.init_std
        if std is None:
            std = np.mean(np.stack([a.std for a in anchors]), axis=0)
        mean = rng.uniform(0.0, 1.0, size=self.b)
        return np.concatenate([mean, np.broadcast_to(std, (self.b,))])

    def mean_stats(self, vec: np.ndarray) -> np.ndarray:
        return np.array(vec[: self.b])


@dataclass(frozen=True)
class LabeledSubset:
    """Target labels for the known vertices."""

    targets: Dict[int, object]

    def __post_init__(self):
        if not self.targets:
            raise InputError("the set of known vertices must be non-empty")

    @property
    def vertices(self) -> List[int]:
        return sorted(self.targets)


def init_weights(h: Hypergraph, known: LabeledSubset, cfg: PropagationConfig):
    """Per-hyperedge member weights and per-vertex incident-edge weights.

    Returns (edge_weights, vertex_weights): for hyperedge E, a weight per
    member vertex (alpha if known, else 1); for vertex v, the weight 1/|E|
    of each incident hyperedge, with gamma appended when v is known.
    """
    known_set = set(known.vertices)
    edge_weights = [
        np.array([cfg.alpha if v in known_set else 1.0 for v in e]) for e in h.edges
    ]
    incident = h.incident_edges()
    vertex_weights = []
    for v in range(h.n):
        w = [1.0 / len(h.edges[e]) for e in incident[v]]
        if v in known_set:
            w.append(cfg.gamma)
        vertex_weights.append(np.array(w))
    return edge_weights, vertex_weights


class _Context:
    """Precomputed flat incidence arrays shared by all steps of one run."""

    def __init__(self, h: Hypergraph, known: LabeledSubset, cfg: PropagationConfig, backend):
        self.h = h
        self.known = known
        self.cfg = cfg
        self.backend = backend

        known_set = set(known.vertices)
        for v in known_set:
            if not (0 <= v < h.n):
                raise InputError(f"known vertex {v} outside [0, {h.n})")

        inc_vertex, inc_edge = [], []
        for idx, e in enumerate(h.edges):
            inc_vertex.extend(e)
            inc_edge.extend([idx] * len(e))
        self.inc_vertex = np.array(inc_vertex, dtype=np.intp)
        self.inc_edge = np.array(inc_edge, dtype=np.intp)
        # hyperedge-side weights: alpha on known members, 1 otherwise
        self.inc_alpha = np.where(
            np.isin(self.inc_vertex, sorted(known_set)), cfg.alpha, 1.0
        )
        sizes = np.array([len(e) for e in h.edges], dtype=float)
        # vertex-side weight of each incidence: 1/|E|
        self.inc_wv = 1.0 / sizes[self.inc_edge] if len(h.edges) else np.zeros(0)
        self.edge_weight_total = np.bincount(
            self.inc_edge, weights=self.inc_alpha, minlength=len(h.edges)
        )

        self.anchor_vertices = np.array(known.vertices, dtype=np.intp)
        self.anchor_values = (
            np.stack([backend.encode(known.targets[v]) for v in known.vertices])
            if known.vertices
            else np.zeros((0, backend.dim))
        )


@dataclass(frozen=True)
class PropagationState:
    """Working state of one run: encoded vertex and hyperedge labels, the loss
    trace, and the iteration counter."""

    context: _Context = field(repr=False)
    vertex_values: np.ndarray = field(repr=False)
    edge_values: Optional[np.ndarray] = field(repr=False, default=None)
    loss_history: tuple = ()
    iterations: int = 0

    def vertex_label(self, v: int):
        return self.context.backend.decode(self.vertex_values[v])

    def labels(self) -> list:
        return [self.vertex_label(v) for v in range(self.context.h.n)]

    def hyperedge_label(self, e: int):
        if self.edge_values is None:
            raise InputError("no hyperedge labels before the first step")
        return self.context.backend.decode(self.edge_values[e])


def _edge_phase(ctx: _Context, vertex_values: np.ndarray) -> np.ndarray:
    """Hyperedge labels: weighted barycenter of member labels."""
    num = np.zeros((len(ctx.h.edges), ctx.backend.dim))
    np.add.at(num, ctx.inc_edge, ctx.inc_alpha[:, None] * vertex_values[ctx.inc_vertex])
    return num / ctx.edge_weight_total[:, None]


def step(state: PropagationState) -> PropagationState:
    """One alternation: update hyperedge labels, then vertex labels, then
    accumulate the loss at the new vertex labels."""
    ctx = state.context
    old = state.vertex_values

    edge_values = _edge_phase(ctx, old)

    num = np.zeros((ctx.h.n, ctx.backend.dim))
    den = np.zeros(ctx.h.n)
    if len(ctx.h.edges):
        np.add.at(num, ctx.inc_vertex, ctx.inc_wv[:, None] * edge_values[ctx.inc_edge])
        den += np.bincount(ctx.inc_vertex, weights=ctx.inc_wv, minlength=ctx.h.n)
    num[ctx.anchor_vertices] += ctx.cfg.gamma * ctx.anchor_values
    den[ctx.anchor_vertices] += ctx.cfg.gamma
    updated = den > 0
    new = np.where(updated[:, None], num / np.where(updated, den, 1.0)[:, None], old)

    scale = ctx.backend.metric_scale
    loss = 0.0
    if len(ctx.h.edges):
        diffs = new[ctx.inc_vertex] - edge_values[ctx.inc_edge]
        loss += float(ctx.inc_wv @ np.sum(diffs * diffs, axis=1)) * scale
    anchor_diffs = new[ctx.anchor_vertices] - ctx.anchor_values
    loss += ctx.cfg.gamma * float(np.sum(anchor_diffs * anchor_diffs)) * scale

    return replace(
        state,
        vertex_values=new,
        edge_values=edge_values,
        loss_history=state.loss_history + (loss,),
        iterations=state.iterations + 1,
    )


def evaluate_loss(state_or_ctx, vertex_values: Optional[np.ndarray] = None) -> float:
    """Loss functional of a fixed vertex labeling: hyperedge labels are the
    barycenters of these labels, and the loss is summed without updating."""
    ctx = state_or_ctx.context if isinstance(state_or_ctx, PropagationState) else state_or_ctx
    if vertex_values is None:
        vertex_values = state_or_ctx.vertex_values
    edge_values = _edge_phase(ctx, vertex_values) if len(ctx.h.edges) else np.zeros((0, ctx.backend.dim))
    scale = ctx.backend.metric_scale
    loss = 0.0
    if len(ctx.h.edges):
        diffs = vertex_values[ctx.inc_vertex] - edge_values[ctx.inc_edge]
        loss += float(ctx.inc_wv @ np.sum(diffs * diffs, axis=1)) * scale
    anchor_diffs = vertex_values[ctx.anchor_vertices] - ctx.anchor_values
    loss += ctx.cfg.gamma * float(np.sum(anchor_diffs * anchor_diffs)) * scale
    return loss


def initial_state(
    h: Hypergraph,
    known: LabeledSubset,
    cfg: PropagationConfig,
    backend,
    initial_labels: Optional[Sequence] = None,
) -> PropagationState:
    """Build the starting state, drawing per-vertex random labels from streams
    seeded by (seed, vertex index) unless explicit labels are given."""
    ctx = _Context(h, known, cfg, backend)
    anchors = [known.targets[v] for v in known.vertices]
    if initial_labels is not None:
        if len(initial_labels) != h.n:
            raise InputError(f"expected {h.n} initial labels, got {len(initial_labels)}")
        values = np.stack([backend.encode(lab) for lab in initial_labels])
    else:
        rows = []
        for v in range(h.n):
            rng = np.random.default_rng([cfg.seed, v])
            rows.append(backend.random_init(rng, anchors))
        values = np.stack(rows)
    return PropagationState(context=ctx, vertex_values=values)


def _warn_unreached(h: Hypergraph, known: LabeledSubset) -> None:
    incident = h.incident_edges()
    reached = np.zeros(h.n, dtype=bool)
    stack = list(known.vertices)
    reached[stack] = True
    seen_edges = np.zeros(len(h.edges), dtype=bool)
    while stack:
        v = stack.pop()
        for e in incident[v]:
            if seen_edges[e]:
                continue
            seen_edges[e] = True
            for u in h.edges[e]:
                if not reached[u]:
                    reached[u] = True
                    stack.append(u)
    isolated = [v for v in range(h.n) if not incident[v] and not reached[v]]
    unreached = [v for v in range(h.n) if not reached[v] and incident[v]]
    if isolated:
        warnings.warn(
            f"{len(isolated)} vertices belong to no hyperedge and keep their "
            f"initialization: {isolated[:10]}{'...' if len(isolated) > 10 else ''}",
            stacklevel=3,
        )
    if unreached:
        warnings.warn(
            f"{len(unreached)} vertices are not reachable from the known set; "
            f"their labels never feel an anchor: "
            f"{unreached[:10]}{'...' if len(unreached) > 10 else ''}",
            stacklevel=3,
        )


def propagate(
    h: Hypergraph,
    known: LabeledSubset,
    cfg: PropagationConfig,
    backend,
    initial_labels: Optional[Sequence] = None,
) -> PropagationState:
    """Run alternating propagation until the relative loss change drops below
    cfg.rel_tol or cfg.max_iters is reached; returns the final state with the
    full loss history."""
    _warn_unreached(h, known)
    state = initial_state(h, known, cfg, backend, initial_labels)
    for _ in range(cfg.max_iters):
        state = step(state)
        hist = state.loss_history
        if len(hist) >= 2 and abs(hist[-1] - hist[-2]) <= cfg.rel_tol * max(1.0, hist[-2]):
            break
    return state


def classify(state: PropagationState) -> np.ndarray:
    """Hard class per vertex from the label means.

    One-dimensional means use the sign rule (+1 for mean >= 0, else -1);
    multi-dimensional means use the argmax coordinate with ties broken toward
    the lowest index.
    """
    stats = np.stack(
        [state.context.backend.mean_stats(state.vertex_values[v]) for v in range(state.context.h.n)]
    )
    if stats.shape[1] == 1:
        return np.where(stats[:, 0] >= 0, 1, -1)
    return np.argmax(stats, axis=1)
