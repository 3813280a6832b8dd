"""Stability constants, generalization bounds, and an empirical stress harness.

The solver's output cost changes by at most beta when one training sample is
replaced, with

    beta = 4 * ||phi||_2^2 * [ 3*sqrt(T*m)/(m*gamma*lambda_1 - T)^2
                               + 4/(m*gamma*lambda_1 - T) + 2/m ],

valid whenever the margin m*gamma*lambda_1 - T is positive.  From beta and
the uniform cost bound M = 4*||phi||_2^2 two generalization bounds follow: a
polynomial one, (64*M*m*beta + 8*M^2)/(m*eps^2), requiring m >= 8*M^2/eps^2,
and an exponential one, 2*exp(-m*eps^2 / (2*(m*beta + M)^2)), for any m >= 1.
Bounds above 1 are vacuous and are reported flagged, never clipped.

The empirical harness replaces single training labels and verifies, on each
swap, that the measured per-slice solution shift and the measured cost shift
stay below their theoretical bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import HypothesisError, InputError, NumericalError
from .hypergraph import WeightedGraph, spectral_gap
from .labels import DominatedQuantileEnvelope, QuantileLabel, check_dominated
from .tikhonov import TrainingSet, solve_field

RATIO_SLACK = 1e-9  # measured/bound ratios above 1 + slack indicate a defect
PROBES_PER_VERTEX = 10


@dataclass(frozen=True)
class StabilityInputs:
    """The five scalars the stability formulas consume."""

    m: int
    gamma: float
    lambda1: float
    T: int
    phi_l2_squared: float

    def __post_init__(self):
        if self.m < 1 or self.T < 1:
            raise InputError("m and T must be positive integers")
        if self.gamma <= 0 or self.lambda1 <= 0:
            raise InputError("gamma and lambda1 must be positive")
        if self.phi_l2_squared < 0:
            raise InputError("phi_l2_squared must be non-negative")

    @property
    def margin(self) -> float:
        return self.m * self.gamma * self.lambda1 - self.T

    @property
    def hypothesis_holds(self) -> bool:
        return self.margin > 0

    @classmethod
    def from_instance(
        cls,
        g: WeightedGraph,
        ts: TrainingSet,
        gamma: float,
        envelope: DominatedQuantileEnvelope,
    ) -> "StabilityInputs":
        return cls(
            m=ts.m,
            gamma=gamma,
            lambda1=spectral_gap(g),
            T=ts.max_multiplicity(),
            phi_l2_squared=envelope.phi_l2_squared,
        )


def slice_shift_coefficient(m: int, gamma: float, lambda1: float, T: int) -> float:
    """Per-slice bound coefficient: the solution shift at one grid node is at
    most this times the quantile bound M_s at that node."""
    margin = m * gamma * lambda1 - T
    if margin <= 0:
        raise HypothesisError(f"margin m*gamma*lambda1 - T = {margin:.6g} must be positive")
    return 3.0 * math.sqrt(T * m) / margin**2 + 4.0 / margin + 2.0 / m


def beta(si: StabilityInputs) -> float:
    """Uniform stability constant of the solver on the dominated class."""
    return 4.0 * si.phi_l2_squared * slice_shift_coefficient(si.m, si.gamma, si.lambda1, si.T)


@dataclass(frozen=True)
class BoundReport:
    """Both generalization bounds plus the hypothesis and vacuity flags.

    margin_positive is None when the report was built from a raw beta with no
    graph instance behind it.
    """

    beta: float
    M: float
    m: int
    epsilon: float
    fraction_bound: float
    exponential_bound: float
    m_ge_4: bool
    sample_size_ok: bool
    margin_positive: Optional[bool]

    @property
    def fraction_vacuous(self) -> bool:
        return self.fraction_bound > 1.0

    @property
    def exponential_vacuous(self) -> bool:
        return self.exponential_bound > 1.0


def bounds_from_beta(
    beta_value: float,
    M: float,
    m: int,
    epsilon: float,
    margin_positive: Optional[bool] = None,
) -> BoundReport:
    """Evaluate both bounds from given (beta, M); values above 1 are reported
    as-is with their vacuity flags."""
    if epsilon <= 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    fraction = (64.0 * M * m * beta_value + 8.0 * M * M) / (m * epsilon * epsilon)
    denom = m * beta_value + M
    exponential = 0.0 if denom == 0 else 2.0 * math.exp(-m * epsilon * epsilon / (2.0 * denom * denom))
    return BoundReport(
        beta=beta_value,
        M=M,
        m=m,
        epsilon=epsilon,
        fraction_bound=fraction,
        exponential_bound=exponential,
        m_ge_4=m >= 4,
        sample_size_ok=m >= 8.0 * M * M / (epsilon * epsilon),
        margin_positive=margin_positive,
    )


def generalization_bounds(si: StabilityInputs, epsilon: float) -> BoundReport:
    """Bounds for a concrete instance; the margin hypothesis must hold."""
    if not si.hypothesis_holds:
        raise HypothesisError(
            f"margin {si.margin:.6g} <= 0: beta is undefined for these inputs"
        )
    return bounds_from_beta(
        beta(si), 4.0 * si.phi_l2_squared, si.m, epsilon, margin_positive=True
    )


@dataclass(frozen=True)
class SwapTrial:
    """Measured-over-bound ratios for one single-sample replacement."""

    swap_index: int
    sample_index: int
    slice_shift_ratio: float
    cost_shift_ratio: float


@dataclass(frozen=True)
class EmpiricalStabilityReport:
    beta: float
    slice_coefficient: float
    trials: Tuple[SwapTrial, ...]

    @property
    def worst_slice_ratio(self) -> float:
        return max(t.slice_shift_ratio for t in self.trials)

    @property
    def worst_cost_ratio(self) -> float:
        return max(t.cost_shift_ratio for t in self.trials)

    @property
    def ok(self) -> bool:
        return (
            self.worst_slice_ratio <= 1.0 + RATIO_SLACK
            and self.worst_cost_ratio <= 1.0 + RATIO_SLACK
        )


def _random_dominated_label(
    rng: np.random.Generator, envelope: DominatedQuantileEnvelope
) -> QuantileLabel:
    # sorted uniforms scaled into [-c, c] with c = min phi: dominated at every
    # node regardless of the envelope's shape
    c = float(envelope.phi.min())
    values = c * np.sort(rng.uniform(-1.0, 1.0, envelope.grid.size))
    return QuantileLabel(envelope.grid, values)


def empirical_stability(
    g: WeightedGraph,
    base: TrainingSet,
    swaps: int,
    gamma: float,
    envelope: DominatedQuantileEnvelope,
    seed: int = 0,
) -> EmpiricalStabilityReport:
    """Stress-test the bounds on `swaps` random single-label replacements.

    Each trial replaces one training label (same vertex) with a fresh
    envelope-dominated label, re-solves, and measures (a) the worst per-slice
    solution shift relative to its bound and (b) the worst cost shift over
    random probe labels at every vertex relative to beta.  A measured value
    beyond its proven bound raises, since that indicates a solver defect.
    """
    if swaps < 1:
        raise InputError(f"swaps must be >= 1, got {swaps}")
    for v, lab in base.samples:
        if not check_dominated(lab, envelope):
            raise InputError(f"training label at vertex {v} is not dominated by the envelope")
    si = StabilityInputs.from_instance(g, base, gamma, envelope)
    if not si.hypothesis_holds:
        raise HypothesisError(f"margin {si.margin:.6g} <= 0: bounds do not apply")

    coeff = slice_shift_coefficient(si.m, si.gamma, si.lambda1, si.T)
    beta_value = beta(si)
    S = envelope.grid.size
    phi = envelope.phi

    rng = np.random.default_rng(seed)
    base_field = solve_field(g, base, gamma).values

    trials: List[SwapTrial] = []
    for k in range(swaps):
        idx = int(rng.integers(0, base.m))
        vertex = base.samples[idx][0]
        swapped = base.replaced(idx, vertex, _random_dominated_label(rng, envelope))
        other_field = solve_field(g, swapped, gamma).values

        # (a) per-slice shift against coeff * M_s with M_s = phi(s_j)
        shift = np.max(np.abs(base_field - other_field), axis=0)
        bound = coeff * phi
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.where(bound > 0, shift / np.where(bound > 0, bound, 1.0), 0.0)
        zero_bound = (bound == 0) & (shift > RATIO_SLACK)
        if zero_bound.any():
            raise NumericalError("solution shifted at a node where the envelope vanishes")
        slice_ratio = float(ratios.max())

        # (b) cost shift over probe labels at every vertex against beta
        probes = np.stack(
            [
                _random_dominated_label(rng, envelope).values
                for _ in range(g.n * PROBES_PER_VERTEX)
            ]
        )
        probe_vertex = np.repeat(np.arange(g.n), PROBES_PER_VERTEX)
        d_base = base_field[probe_vertex] - probes
        d_other = other_field[probe_vertex] - probes
        costs_base = np.sum(d_base * d_base, axis=1) / S
        costs_other = np.sum(d_other * d_other, axis=1) / S
        worst_shift = float(np.max(np.abs(costs_base - costs_other)))
        cost_ratio = worst_shift / beta_value if beta_value > 0 else (0.0 if worst_shift == 0 else np.inf)

        if slice_ratio > 1.0 + RATIO_SLACK:
            raise NumericalError(
                f"swap {k}: slice shift ratio {slice_ratio:.6g} exceeds the proven bound"
            )
        if cost_ratio > 1.0 + RATIO_SLACK:
            raise NumericalError(
                f"swap {k}: cost shift ratio {cost_ratio:.6g} exceeds beta"
            )
        trials.append(SwapTrial(k, idx, slice_ratio, float(cost_ratio)))

    return EmpiricalStabilityReport(
        beta=beta_value, slice_coefficient=coeff, trials=tuple(trials)
    )
