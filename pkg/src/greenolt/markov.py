"""Sleep-control state chain: state space, transition matrix, stationary solve.

The chain tracks the number of powered line cards plus the hysteresis
counters of the sleep policy. Arrivals are per-cycle Poisson packet counts
(downstream only); a cycle's arrival volume falls in one of three bands
relative to the current card count i:

  below  -- volume under (i-1) cards' worth: start/continue the power-down
            countdown,
  stay   -- volume between (i-1) and i cards' worth (boundaries inclusive),
  above  -- volume over i cards' worth: start/continue the power-up
            countdown.

The same band rule drives both the analytic matrix and the cycle simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import poisson as poisson_dist

from . import _kernels
from .chassis import ChassisConfig, SleepPolicy

ROW_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-8
NORMALIZATION_TOL = 1e-10
POWER_ITER_TOL = 1e-12
POWER_ITER_MAX = 10**6

ACTIVE = "active"
DOWN = "down"
UP = "up"


class NonConvergenceError(RuntimeError):
    """Raised when no unique stationary distribution can be computed."""


@dataclass(frozen=True)
class ChainState:
    """One chassis state: ``level`` cards powered, optionally ``stage`` cycles
    into a listening countdown (cards stay on while listening)."""

    kind: str
    level: int
    stage: int = 0

    def __post_init__(self):
        if self.kind not in (ACTIVE, DOWN, UP):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if self.kind == ACTIVE and self.stage != 0:
            raise ValueError("active states carry no listening stage")
        if self.kind == DOWN and self.level < 2:
            raise ValueError("no power-down chain below 2 active cards")
        if self.kind in (DOWN, UP) and self.stage < 1:
            raise ValueError("listening stage must be >= 1")

    @classmethod
    def active(cls, level: int) -> "ChainState":
        return cls(ACTIVE, level)

    @classmethod
    def down(cls, level: int, stage: int) -> "ChainState":
        return cls(DOWN, level, stage)

    @classmethod
    def up(cls, level: int, stage: int) -> "ChainState":
        return cls(UP, level, stage)

    @property
    def active_cards(self) -> int:
        return self.level

    @property
    def label(self) -> str:
        """Short name: A3, D3(2) = 3 cards, 2nd cycle toward 2; I3(1) likewise."""
        if self.kind == ACTIVE:
            return f"A{self.level}"
        tag = "D" if self.kind == DOWN else "I"
        return f"{tag}{self.level}({self.stage})"


def build_state_space(L: int, M: int, N: int) -> list[ChainState]:
    """Canonical state order: actives, then power-down chains, then power-up.

    Exactly L + (L-1)*M + (L-1)*N states.
    """
    if L < 1 or M < 1 or N < 1:
        raise ValueError("L, M, N must all be >= 1")
    states = [ChainState.active(i) for i in range(1, L + 1)]
    states += [ChainState.down(i, j) for i in range(2, L + 1) for j in range(1, M + 1)]
    states += [ChainState.up(i, k) for i in range(1, L) for k in range(1, N + 1)]
    return states


def state_index(states: list[ChainState]) -> dict[ChainState, int]:
    return {s: n for n, s in enumerate(states)}


def classify_arrival(arrival_bits: float, level: int, config: ChassisConfig) -> int:
    """Band of a cycle's arrival volume at ``level`` powered cards.

    Returns -1 (below), 0 (stay) or +1 (above). Volumes exactly on a
    threshold count as "stay", which keeps the three bands a disjoint
    partition.
    """
    per_card = config.cycle_bits_per_card
    if arrival_bits < (level - 1) * per_card:
        return -1
    if arrival_bits > level * per_card:
        return 1
    return 0


def successor(state: ChainState, band: int, L: int, M: int, N: int) -> ChainState:
    """Single-cycle transition for one observed band.

    This is the one transition rule shared by the analytic matrix, the
    policy stepper and (re-encoded on integers) the simulation kernels. Any
    listening state whose trigger condition lapses snaps back to its active
    state with both countdowns cleared.
    """
    if state.kind == ACTIVE:
        i = state.level
        if band < 0 and i >= 2:
            return ChainState.down(i, 1)
        if band > 0 and i <= L - 1:
            return ChainState.up(i, 1)
        return state
    if state.kind == DOWN:
        if band < 0:
            if state.stage >= M:
                return ChainState.active(state.level - 1)
            return ChainState.down(state.level, state.stage + 1)
        return ChainState.active(state.level)
    # UP
    if band > 0:
        if state.stage >= N:
            return ChainState.active(state.level + 1)
        return ChainState.up(state.level, state.stage + 1)
    return ChainState.active(state.level)


def next_state(
    state: ChainState,
    arrival_bits: float,
    config: ChassisConfig,
    policy: SleepPolicy,
) -> ChainState:
    """Deterministic transition for one cycle's realized arrival volume."""
    band = classify_arrival(arrival_bits, state.level, config)
    return successor(
        state, band, config.line_cards, policy.listen_down, policy.listen_up
    )


def poisson_arrival_prob(lambda_a: float, T: float, alpha: int) -> float:
    """Probability of exactly ``alpha`` packet arrivals in one cycle.

    Evaluated in log space so large lambda*T stay finite.
    """
    if lambda_a < 0:
        raise ValueError("arrival rate must be >= 0")
    if T <= 0:
        raise ValueError("cycle length must be > 0")
    if alpha < 0:
        raise ValueError("alpha must be a non-negative integer")
    mu = lambda_a * T
    if mu == 0:
        return 1.0 if alpha == 0 else 0.0
    return math.exp(-mu + alpha * math.log(mu) - math.lgamma(alpha + 1))


def _count_below(threshold_packets: float) -> int:
    """Largest integer packet count strictly below the threshold (-1 if none)."""
    floor = math.floor(threshold_packets)
    if floor == threshold_packets:
        return floor - 1
    return floor


def _band_probabilities(
    mu: float, level: int, config: ChassisConfig
) -> tuple[float, float, float]:
    """(below, stay, above) probabilities of a Poisson(mu) packet count at
    ``level`` powered cards. Sums to 1 exactly by construction."""
    per_card = config.cycle_packets_per_card
    k_below = _count_below((level - 1) * per_card)
    k_stay = math.floor(level * per_card)
    p_below = float(poisson_dist.cdf(k_below, mu)) if k_below >= 0 else 0.0
    p_above = float(poisson_dist.sf(k_stay, mu))
    return p_below, 1.0 - p_below - p_above, p_above


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic single-cycle transition matrix over the canonical states."""

    probabilities: np.ndarray
    states: tuple[ChainState, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "probabilities", np.asarray(self.probabilities, dtype=float)
        )
        n = len(self.states)
        if self.probabilities.shape != (n, n):
            raise ValueError("matrix shape does not match the state space")
        if np.any(self.probabilities < 0) or np.any(self.probabilities > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_sums = self.probabilities.sum(axis=1)
        if np.max(np.abs(row_sums - 1.0)) > ROW_SUM_TOL:
            raise ValueError("transition matrix rows must sum to 1")

    @property
    def index(self) -> dict[ChainState, int]:
        return state_index(list(self.states))

    def prob(self, src: ChainState, dst: ChainState) -> float:
        idx = self.index
        return float(self.probabilities[idx[src], idx[dst]])


def build_transition_matrix(
    config: ChassisConfig, policy: SleepPolicy, lambda_a: float
) -> TransitionMatrix:
    """Transition matrix of the sleep chain under Poisson(lambda_a) arrivals.

    Each row spreads the three band probabilities over the band successors,
    so rows sum to 1 with no renormalization.
    """
    if lambda_a < 0:
        raise ValueError("arrival rate must be >= 0")
    L, M, N = config.line_cards, policy.listen_down, policy.listen_up
    states = build_state_space(L, M, N)
    idx = state_index(states)
    mu = lambda_a * config.cycle_length

    probs = np.zeros((len(states), len(states)))
    band_cache = {
        level: _band_probabilities(mu, level, config) for level in range(1, L + 1)
    }
    for state in states:
        p_below, p_stay, p_above = band_cache[state.level]
        row = idx[state]
        for band, p in ((-1, p_below), (0, p_stay), (1, p_above)):
            if p > 0.0:
                probs[row, idx[successor(state, band, L, M, N)]] += p
    return TransitionMatrix(probs, tuple(states))


@dataclass(frozen=True)
class StationaryDistribution:
    """Long-run occupancy probability of every chain state."""

    probabilities: np.ndarray
    states: tuple[ChainState, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "probabilities", np.asarray(self.probabilities, dtype=float)
        )
        if self.probabilities.shape != (len(self.states),):
            raise ValueError("distribution length does not match the state space")
        if np.any(self.probabilities < 0):
            raise ValueError("probabilities must be >= 0")
        if abs(self.probabilities.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("probabilities must sum to 1")

    def as_dict(self) -> dict[str, float]:
        return {s.label: float(p) for s, p in zip(self.states, self.probabilities)}

    def probability(self, state: ChainState) -> float:
        return float(self.probabilities[self.states.index(state)])

    @property
    def mean_active_cards(self) -> float:
        cards = np.array([s.active_cards for s in self.states], dtype=float)
        return float(cards @ self.probabilities)


def _recurrent_class(probs: np.ndarray) -> np.ndarray:
    """Indices of the chain's single recurrent class.

    States outside it are transient and carry zero stationary mass. More
    than one closed class means the stationary distribution is not unique.
    """
    support = csr_matrix(probs > 0)
    n_comp, labels = connected_components(support, directed=True, connection="strong")
    closed = []
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        outside = np.ones(probs.shape[0], dtype=bool)
        outside[members] = False
        if probs[np.ix_(members, np.flatnonzero(outside))].sum() == 0.0:
            closed.append(members)
    if len(closed) != 1:
        raise NonConvergenceError(
            f"chain has {len(closed)} closed recurrent classes; "
            "stationary distribution is not unique"
        )
    return closed[0]


def _power_iteration(probs: np.ndarray) -> np.ndarray:
    pi = np.full(probs.shape[0], 1.0 / probs.shape[0])
    for _ in range(POWER_ITER_MAX):
        nxt = pi @ probs
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= POWER_ITER_TOL:
            return nxt
        pi = nxt
    raise NonConvergenceError("power iteration did not converge")


def solve_stationary(matrix: TransitionMatrix) -> StationaryDistribution:
    """Solve pi = pi P with sum(pi) = 1.

    The balance equations are solved directly on the recurrent class (the
    normalization row replaces one redundant balance equation); power
    iteration is the fallback when that system is numerically singular.
    """
    probs = matrix.probabilities
    n = probs.shape[0]
    full = np.zeros(n)
    recurrent = _recurrent_class(probs)
    sub = probs[np.ix_(recurrent, recurrent)]
    m = sub.shape[0]
    if m == 1:
        full[recurrent] = 1.0
        return StationaryDistribution(full, matrix.states)

    system = sub.T - np.eye(m)
    system[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
        if np.any(pi < -1e-9):
            raise np.linalg.LinAlgError("negative stationary mass")
    except np.linalg.LinAlgError:
        pi = _power_iteration(sub)

    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    full[recurrent] = pi

    residual = np.max(np.abs(full @ probs - full))
    if residual > RESIDUAL_TOL:
        raise NonConvergenceError(f"stationary residual {residual:.3e} too large")
    return StationaryDistribution(full, matrix.states)


def average_power(dist: StationaryDistribution, config: ChassisConfig) -> float:
    """Mean chassis power: every state burns its card count times card power."""
    return config.card_power * dist.mean_active_cards


def analytic_saving(dist: StationaryDistribution, config: ChassisConfig) -> float:
    """Long-run saving vs. an always-fully-on chassis, switch draw included."""
    total = config.card_power * config.line_cards
    return 1.0 - (average_power(dist, config) + config.switch_power) / total


def walk_occupancy(
    matrix: TransitionMatrix,
    steps: int,
    seed: int,
    start: ChainState | None = None,
) -> StationaryDistribution:
    """Empirical state occupancy of a random walk over ``matrix``.

    Monte-Carlo cross-check for :func:`solve_stationary`; the walk consumes
    pre-drawn uniforms so the compiled and pure kernels agree bit for bit.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    states = matrix.states
    if start is None:  # boot fully on, like the simulator
        start = ChainState.active(max(s.level for s in states))
    start_idx = matrix.index[start]
    cum = np.cumsum(matrix.probabilities, axis=1)
    uniforms = np.random.default_rng(seed).random(steps)
    counts = _kernels.chain_walk(cum, uniforms, start_idx)
    return StationaryDistribution(counts / float(steps), states)


def total_variation(a: StationaryDistribution, b: StationaryDistribution) -> float:
    if a.states != b.states:
        raise ValueError("distributions live on different state spaces")
    return 0.5 * float(np.abs(a.probabilities - b.probabilities).sum())
