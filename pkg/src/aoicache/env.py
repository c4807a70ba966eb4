"""Cache-update environment: AoI bookkeeping, drifting Zipf requests, and
the one-epoch MDP step.

An edge node caches one content item per sensor. Each epoch it sees the
per-item age-of-information (epochs since generation, capped at t_max) and
the user request counts, picks one item to refresh (or none), and pays the
request-weighted average age of the *next* epoch plus eta times the chosen
sensor's average upload energy. Reward is the negated cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvConfig:
    num_sensors: int
    t_max: int = 100
    eta: float = 1.0
    num_users: int = 100
    skew_set: tuple = (0.5, 1.0, 1.5, 2.0)
    p_shuffle: float = 0.1
    p_skew: float = 0.05
    seed: int = 0
    variable_users: bool = False  # draw the user count uniformly from {0..num_users}
    initial_ranks: tuple = None  # fixed starting rank order; None draws one from the seed

    def __post_init__(self):
        if self.num_sensors < 1:
            raise ValueError(f"num_sensors must be >= 1, got {self.num_sensors}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.eta < 0.0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.num_users < 0:
            raise ValueError(f"num_users must be >= 0, got {self.num_users}")
        if len(self.skew_set) == 0:
            raise ValueError("skew_set must be non-empty")
        if any(k < 0.0 for k in self.skew_set):
            raise ValueError(f"skew_set values must be >= 0, got {self.skew_set}")
        for name in ("p_shuffle", "p_skew"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.initial_ranks is not None:
            ranks = tuple(int(r) for r in self.initial_ranks)
            object.__setattr__(self, "initial_ranks", ranks)
            if sorted(ranks) != list(range(1, self.num_sensors + 1)):
                raise ValueError(
                    f"initial_ranks must be a permutation of 1..{self.num_sensors}, got {ranks}")


@dataclass
class PopularityState:
    """Zipf popularity over items: per-item rank, skew, and the rng that
    drives the drift."""

    ranks: np.ndarray
    skew: float
    rng: np.random.Generator


@dataclass(frozen=True)
class RequestBatch:
    counts: np.ndarray
    total: int


@dataclass(frozen=True)
class MdpState:
    aoi: np.ndarray
    requests: np.ndarray


@dataclass(frozen=True)
class CacheState:
    generation_epoch: np.ndarray
    epoch: int


@dataclass(frozen=True)
class StepOutcome:
    next_state: MdpState
    reward: float
    cost: float
    aoi_term: float
    energy_term: float


def compute_aoi(t: int, v_f: int, t_max: int) -> int:
    """Age of one item at epoch t given its generation epoch, capped at t_max."""
    if t < 0:
        raise ValueError(f"epoch must be >= 0, got {t}")
    return min(max(t - v_f, 1), t_max)


def average_aoi(aoi, counts) -> float:
    """Request-weighted mean age; 0 by convention when no requests arrived."""
    total = int(np.sum(counts))
    if total == 0:
        return 0.0
    return float(np.dot(aoi, counts)) / total


def advance_aoi(aoi: np.ndarray, action: int, t_max: int) -> np.ndarray:
    """Next-epoch ages: the refreshed item drops to 1, all others age by one
    up to the cap. Action 0 refreshes nothing."""
    if not 0 <= action <= len(aoi):
        raise ValueError(f"action must be in [0, {len(aoi)}], got {action}")
    out = np.minimum(np.asarray(aoi) + 1, t_max)
    if action > 0:
        out[action - 1] = 1
    return out


def zipf_probabilities(ranks: np.ndarray, skew: float) -> np.ndarray:
    """Request probabilities p_f proportional to rank_f^(-skew)."""
    weights = np.asarray(ranks, dtype=float) ** (-skew)
    return weights / weights.sum()


def evolve_popularity(state: PopularityState, config: EnvConfig) -> PopularityState:
    """One drift step: with p_shuffle swap the ranks of two distinct items,
    and independently with p_skew redraw the skew from the configured set.

    All random draws happen every epoch regardless of the outcomes, so rng
    consumption per epoch is constant and request streams stay aligned
    across policies run from the same seed.
    """
    rng = state.rng
    num = len(state.ranks)
    u_swap = rng.random()
    if num >= 2:
        i = int(rng.integers(num))
        j = int(rng.integers(num - 1))
        if j >= i:
            j += 1
    else:
        i = j = 0
    u_skew = rng.random()
    skew_idx = int(rng.integers(len(config.skew_set)))

    ranks = state.ranks
    if u_swap < config.p_shuffle and num >= 2:
        ranks = ranks.copy()
        ranks[i], ranks[j] = ranks[j], ranks[i]
    skew = state.skew
    if u_skew < config.p_skew:
        skew = float(config.skew_set[skew_idx])
    return PopularityState(ranks=ranks, skew=skew, rng=rng)


def sample_requests(pop: PopularityState, num_users: int, rng: np.random.Generator) -> RequestBatch:
    """Counts of num_users independent item choices from the current Zipf law."""
    if num_users < 0:
        raise ValueError(f"num_users must be >= 0, got {num_users}")
    counts = rng.multinomial(num_users, zipf_probabilities(pop.ranks, pop.skew))
    return RequestBatch(counts=counts, total=num_users)


class CacheEnv:
    """Single-owner mutable environment; all randomness flows from the
    config seed so identical configs replay identical trajectories."""

    def __init__(self, config: EnvConfig, update_energy_j):
        self.config = config
        energy = np.asarray(update_energy_j, dtype=float)
        if energy.shape != (config.num_sensors,):
            raise ValueError(
                f"update_energy_j must have shape ({config.num_sensors},), got {energy.shape}")
        if np.any(energy < 0.0) or not np.all(np.isfinite(energy)):
            raise ValueError("update_energy_j entries must be finite and >= 0")
        # index by action: 0 is the idle action and costs nothing
        self._energy = np.concatenate(([0.0], energy))
        self.reset()

    def reset(self) -> MdpState:
        cfg = self.config
        self._rng = np.random.default_rng(cfg.seed)
        # generation epoch -1 makes every age exactly 1 at epoch 0 and lets
        # ages increment by one per epoch from the very first step
        self._generation = np.full(cfg.num_sensors, -1, dtype=np.int64)
        self._epoch = 0
        if cfg.initial_ranks is not None:
            ranks = np.array(cfg.initial_ranks, dtype=np.int64)
        else:
            ranks = np.arange(1, cfg.num_sensors + 1)[self._rng.permutation(cfg.num_sensors)]
        skew = float(cfg.skew_set[self._rng.integers(len(cfg.skew_set))])
        self._pop = PopularityState(ranks=ranks, skew=skew, rng=self._rng)
        self._requests = self._draw_requests()
        self._pending = self._presample_next()
        return self.state

    # -- read-only views ----------------------------------------------------

    @property
    def num_sensors(self) -> int:
        return self.config.num_sensors

    @property
    def num_actions(self) -> int:
        return self.config.num_sensors + 1

    @property
    def epoch(self) -> int:
        return self._epoch

    @property
    def aoi(self) -> np.ndarray:
        ages = self._epoch - self._generation
        return np.minimum(np.maximum(ages, 1), self.config.t_max)

    @property
    def state(self) -> MdpState:
        return MdpState(aoi=self.aoi, requests=self._requests.counts.copy())

    @property
    def cache_state(self) -> CacheState:
        return CacheState(generation_epoch=self._generation.copy(), epoch=self._epoch)

    @property
    def popularity(self) -> PopularityState:
        return self._pop

    def energy_of(self, action: int) -> float:
        return float(self._energy[action])

    def peek_next_requests(self) -> RequestBatch:
        """The exact request batch the next step will charge against."""
        return RequestBatch(counts=self._pending.counts.copy(), total=self._pending.total)

    # -- dynamics -----------------------------------------------------------

    def step(self, action: int) -> StepOutcome:
        if not 0 <= action <= self.config.num_sensors:
            raise ValueError(
                f"action must be in [0, {self.config.num_sensors}], got {action}")
        if action > 0:
            self._generation[action - 1] = self._epoch
        self._epoch += 1
        self._requests = self._pending
        aoi_term = average_aoi(self.aoi, self._requests.counts)
        energy_term = self.energy_of(action)
        cost = aoi_term + self.config.eta * energy_term
        self._pending = self._presample_next()
        return StepOutcome(next_state=self.state, reward=-cost, cost=cost,
                           aoi_term=aoi_term, energy_term=energy_term)

    def _draw_requests(self) -> RequestBatch:
        users = self.config.num_users
        if self.config.variable_users:
            users = int(self._rng.integers(0, self.config.num_users + 1))
        return sample_requests(self._pop, users, self._rng)

    def _presample_next(self) -> RequestBatch:
        # requests for epoch t+1 are drawn as soon as epoch t is entered so
        # peek_next_requests never perturbs the rng trajectory
        self._pop = evolve_popularity(self._pop, self.config)
        return self._draw_requests()
