"""Closed-form graph Tikhonov solver for quantile labels.

The fit-plus-smoothness objective over quantile-represented labels decouples
into one quadratic problem per grid node s: minimize

    (1/m) * sum_samples (F_mu^{-1}(s) - Phi_s(v))^2  +  gamma * Phi_s^T L Phi_s

whose stationarity condition is the linear system (T + m*gamma*L) Phi_s = y_s,
with T the diagonal matrix of per-vertex sample multiplicities and y_s the
per-vertex sums of training quantiles at s.  On a connected graph with at
least one sample the matrix is symmetric positive definite, so each slice is
solved directly; the operator is shared across slices and factored once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InputError, NumericalError, StructureError
from .hypergraph import WeightedGraph, is_connected, laplacian, spectral_gap
from .labels import (
    DominatedQuantileEnvelope,
    QuantileGrid,
    QuantileLabel,
    check_dominated,
)

DENSE_SOLVE_LIMIT = 2000     # direct Cholesky factorization up to this size
CG_RELATIVE_RESIDUAL = 1e-10
RESIDUAL_TOL = 1e-9          # solve contract: ||A x - y||_inf <= tol * max(1, ||y||_inf)
MONOTONE_SLACK = 1e-9        # monotonicity violations beyond this are a solver defect
MAX_PRINCIPLE_SLACK = 1e-9


@dataclass(frozen=True)
class TrainingSet:
    """(vertex, quantile label) samples with multiplicities.

    The same vertex may appear in several samples; its multiplicity is the
    number of samples at it.  All labels must share one grid.
    """

    samples: Tuple[Tuple[int, QuantileLabel], ...]

    def __init__(self, samples: Sequence[Tuple[int, QuantileLabel]]):
        samples = tuple((int(v), lab) for v, lab in samples)
        if len(samples) == 0:
            raise InputError("training set must contain at least one sample")
        grid = samples[0][1].grid
        for v, lab in samples:
            if v < 0:
                raise InputError(f"negative vertex index {v}")
            if lab.grid.size != grid.size:
                raise InputError("all training labels must share one grid")
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        """Total sample count."""
        return len(self.samples)

    @property
    def grid(self) -> QuantileGrid:
        return self.samples[0][1].grid

    @property
    def labeled_vertices(self) -> List[int]:
        """Sorted distinct vertices carrying at least one sample."""
        return sorted({v for v, _ in self.samples})

    def multiplicities(self, n: int) -> np.ndarray:
        """Vector t with t[i] = number of samples at vertex i, length n."""
        t = np.zeros(n)
        for v, _ in self.samples:
            if v >= n:
                raise InputError(f"sample vertex {v} outside [0, {n})")
            t[v] += 1.0
        return t

    def max_multiplicity(self) -> int:
        t = {}
        for v, _ in self.samples:
            t[v] = t.get(v, 0) + 1
        return max(t.values())

    def rhs_matrix(self, n: int) -> np.ndarray:
        """(n, S) matrix whose column j is y at grid node j: per-vertex sums
        of training quantile samples."""
        y = np.zeros((n, self.grid.size))
        for v, lab in self.samples:
            if v >= n:
                raise InputError(f"sample vertex {v} outside [0, {n})")
            y[v] += lab.values
        return y

    def replaced(self, index: int, vertex: int, label: QuantileLabel) -> "TrainingSet":
        """Copy with sample `index` swapped for (vertex, label)."""
        new = list(self.samples)
        new[index] = (int(vertex), label)
        return TrainingSet(new)


class TikhonovOperator:
    """The shared slice operator A = T + m*gamma*L with a reusable factorization."""

    def __init__(self, g: WeightedGraph, ts: TrainingSet, gamma: float):
        if gamma <= 0:
            raise InputError(f"gamma must be positive, got {gamma}")
        if not is_connected(g):
            raise StructureError("Tikhonov solve requires a connected graph")
        self.graph = g
        self.gamma = float(gamma)
        self.m = ts.m
        self.t = ts.multiplicities(g.n)
        lap = laplacian(g)
        self.matrix = (sp.diags(self.t) + self.m * self.gamma * lap.matrix).tocsr()
        self._cho = None
        if g.n <= DENSE_SOLVE_LIMIT:
            try:
                self._cho = sla.cho_factor(self.matrix.toarray())
            except sla.LinAlgError as exc:
                raise NumericalError(f"operator not positive definite: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve A x = rhs for a vector or an (n, k) block, with residual check."""
        if self._cho is not None:
            x = sla.cho_solve(self._cho, rhs)
        else:
            rhs2 = rhs if rhs.ndim == 2 else rhs[:, None]
            cols = []
            for j in range(rhs2.shape[1]):
                xj, info = spla.cg(self.matrix, rhs2[:, j], rtol=CG_RELATIVE_RESIDUAL, atol=0.0)
                if info != 0:
                    raise NumericalError(f"conjugate gradient did not converge (info={info})")
                cols.append(xj)
            x = np.stack(cols, axis=1)
            if rhs.ndim == 1:
                x = x[:, 0]
        resid = np.max(np.abs(self.matrix @ x - rhs))
        scale = max(1.0, float(np.max(np.abs(rhs)))) if rhs.size else 1.0
        if resid > RESIDUAL_TOL * scale:
            raise NumericalError(
                f"solve residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e} * {scale:.3e}"
            )
        return x


@dataclass(frozen=True)
class SliceSystem:
    """One grid node's linear system: operator, right-hand side, and offset.

    The offset ybar is the sample mean of the training quantiles at this node;
    the centered right-hand side y - ybar*T*1 always sums to zero, which is
    checked at construction.
    """

    operator: TikhonovOperator
    s_index: int
    y: np.ndarray
    ybar: float

    def __post_init__(self):
        centered_sum = float(np.sum(self.y - self.ybar * self.operator.t))
        scale = max(1.0, float(np.sum(np.abs(self.y))))
        if abs(centered_sum) > 1e-12 * scale:
            raise NumericalError(
                f"centering identity violated: 1^T(y - ybar*T*1) = {centered_sum:.3e}"
            )


def assemble_system(
    g: WeightedGraph,
    ts: TrainingSet,
    gamma: float,
    s_index: int,
    operator: Optional[TikhonovOperator] = None,
) -> SliceSystem:
    """Build the slice system at one grid node; `operator` may be shared."""
    if operator is None:
        operator = TikhonovOperator(g, ts, gamma)
    if not (0 <= s_index < ts.grid.size):
        raise InputError(f"slice index {s_index} outside [0, {ts.grid.size})")
    y = np.zeros(g.n)
    for v, lab in ts.samples:
        y[v] += lab.values[s_index]
    return SliceSystem(operator=operator, s_index=s_index, y=y, ybar=float(y.sum()) / ts.m)


def solve_slice(sys: SliceSystem) -> np.ndarray:
    """Minimizer of the single-node quadratic, as a length-n vector."""
    return sys.operator.solve(sys.y)


@dataclass(frozen=True)
class QuantileField:
    """Solved labels for all vertices: matrix of shape (n, S), row i holding
    vertex i's quantile samples.  Every row is non-decreasing."""

    grid: QuantileGrid
    values: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def label(self, vertex: int) -> QuantileLabel:
        return QuantileLabel(self.grid, self.values[vertex])

    def labels(self) -> List[QuantileLabel]:
        return [self.label(i) for i in range(self.n)]


def solve_field(g: WeightedGraph, ts: TrainingSet, gamma: float) -> QuantileField:
    """Solve all S slice systems with one shared factorization.

    Each vertex row of the result is checked for monotonicity in s.  The
    solution is provably non-decreasing, so violations beyond MONOTONE_SLACK
    raise; roundoff-size ones are clamped by a running maximum.
    """
    op = TikhonovOperator(g, ts, gamma)
    rhs = ts.rhs_matrix(g.n)
    phi = op.solve(rhs)
    drops = np.diff(phi, axis=1)
    worst = -float(drops.min()) if drops.size else 0.0
    if worst > MONOTONE_SLACK:
        raise NumericalError(
            f"monotonicity violated by {worst:.3e} (> {MONOTONE_SLACK:.0e}); solver defect"
        )
    if worst > 0.0:
        phi = np.maximum.accumulate(phi, axis=1)
    return QuantileField(grid=ts.grid, values=phi)


@dataclass(frozen=True)
class MaxPrincipleReport:
    """Outcome of the per-slice extrema checks over a solved field.

    ``max_excess`` / ``min_excess`` are the worst amounts (over slices) by
    which the field's global max exceeds the labeled-vertex max, resp. the
    labeled-vertex min exceeds the global min; both should be ~0.
    ``negative_dip`` is the worst negativity of the field over slices whose
    right-hand side is entrywise non-negative.
    """

    extrema_on_labeled: bool
    nonnegative_ok: bool
    max_excess: float
    min_excess: float
    negative_dip: float
    slack: float = MAX_PRINCIPLE_SLACK

    @property
    def ok(self) -> bool:
        return self.extrema_on_labeled and self.nonnegative_ok


def check_maximum_principle(field: QuantileField, ts: TrainingSet, n: Optional[int] = None) -> MaxPrincipleReport:
    """Verify that per-slice extrema are attained on labeled vertices and that
    slices with non-negative data stay non-negative."""
    n = field.n if n is None else n
    labeled = ts.labeled_vertices
    phi = field.values
    sub = phi[labeled, :]
    max_excess = float(np.max(phi.max(axis=0) - sub.max(axis=0)))
    min_excess = float(np.max(sub.min(axis=0) - phi.min(axis=0)))
    rhs = ts.rhs_matrix(field.n)
    nonneg_slices = np.all(rhs >= 0, axis=0)
    if nonneg_slices.any():
        negative_dip = -float(phi[:, nonneg_slices].min())
    else:
        negative_dip = 0.0
    return MaxPrincipleReport(
        extrema_on_labeled=(max_excess <= MAX_PRINCIPLE_SLACK and min_excess <= MAX_PRINCIPLE_SLACK),
        nonnegative_ok=(negative_dip <= MAX_PRINCIPLE_SLACK),
        max_excess=max_excess,
        min_excess=min_excess,
        negative_dip=negative_dip,
    )


def check_apriori(
    field: QuantileField,
    envelope: DominatedQuantileEnvelope,
    ts: Optional[TrainingSet] = None,
) -> bool:
    """True iff every row of the field is dominated by the envelope (1e-9 slack).

    When the training set is supplied, its labels are required to be dominated
    exactly; a violation there voids the estimate and raises.
    """
    if ts is not None:
        for v, lab in ts.samples:
            if not check_dominated(lab, envelope):
                raise InputError(f"training label at vertex {v} is not dominated by the envelope")
    if field.grid.size != envelope.grid.size:
        raise InputError("field and envelope grids differ")
    return bool(np.all(np.abs(field.values) <= envelope.phi[None, :] + 1e-9))


def invertibility_margin(ts: TrainingSet, g: WeightedGraph, gamma: float) -> float:
    """m*gamma*lambda_1 - max multiplicity; positive means the stability
    hypothesis holds.  Non-positive values only void the stability bound,
    not the solve, so they warn instead of raising."""
    margin = ts.m * gamma * spectral_gap(g) - ts.max_multiplicity()
    if margin <= 0:
        warnings.warn(
            f"invertibility margin {margin:.6g} <= 0: the stability bound is vacuous "
            "for this (m, gamma); the solve itself is unaffected",
            stacklevel=2,
        )
    return float(margin)
