"""Comparison policies behind one interface, plus an exact finite-MDP
solver for tiny frozen-popularity instances.

Baselines: most-popular update (refresh the item with the most requests
this epoch), oracle update (minimize the realized one-step cost using the
next epoch's requests), and random update. The value-iteration solver
bounds the learned policy's optimality gap on instances small enough to
enumerate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .agent import DqnAgent, EpochRecord, run_training
from .env import CacheEnv, MdpState, advance_aoi, average_aoi, zipf_probabilities

POLICY_KINDS = ("dqn", "mpu", "ou", "ru", "vi")


def mpu_action(state: MdpState) -> int:
    """Refresh the item with the highest request count; ties to the lowest
    index, idle when nobody asked for anything."""
    if int(np.sum(state.requests)) == 0:
        return 0
    return int(np.argmax(state.requests)) + 1


def ou_action(env: CacheEnv) -> int:
    """Pick the action minimizing the realized one-step cost, using the
    request batch the environment will charge next epoch."""
    nxt = env.peek_next_requests().counts
    total = int(nxt.sum())
    aoi = env.aoi
    t_max = env.config.t_max
    costs = np.empty(env.num_actions)
    for action in range(env.num_actions):
        aoi_term = average_aoi(advance_aoi(aoi, action, t_max), nxt) if total else 0.0
        costs[action] = aoi_term + env.config.eta * env.energy_of(action)
    return int(np.argmin(costs))


def ru_action(num_sensors: int, rng: np.random.Generator) -> int:
    """Uniform over the idle action and all refresh actions."""
    if num_sensors < 1:
        raise ValueError(f"num_sensors must be >= 1, got {num_sensors}")
    return int(rng.integers(0, num_sensors + 1))


class MpuPolicy:
    name = "mpu"

    def act(self, env: CacheEnv) -> int:
        return mpu_action(env.state)

    def run(self, env: CacheEnv, epochs: int):
        return run_policy(env, self, epochs)


class OuPolicy:
    name = "ou"

    def act(self, env: CacheEnv) -> int:
        return ou_action(env)

    def run(self, env: CacheEnv, epochs: int):
        return run_policy(env, self, epochs)


class RuPolicy:
    name = "ru"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def act(self, env: CacheEnv) -> int:
        return ru_action(env.num_sensors, self.rng)

    def run(self, env: CacheEnv, epochs: int):
        return run_policy(env, self, epochs)


class DqnPolicy:
    """Wraps an agent; running it trains, acting alone is greedy."""

    name = "dqn"

    def __init__(self, agent: DqnAgent):
        self.agent = agent

    def act(self, env: CacheEnv) -> int:
        return self.agent.greedy_action(env.state)

    def run(self, env: CacheEnv, epochs: int):
        return run_training(env, self.agent, epochs)


class TablePolicy:
    """Plays a precomputed state-to-action table (value-iteration output)."""

    name = "vi"

    def __init__(self, solution: "ViSolution"):
        self.solution = solution

    def act(self, env: CacheEnv) -> int:
        return self.solution.greedy_action(env.aoi)

    def run(self, env: CacheEnv, epochs: int):
        return run_policy(env, self, epochs)


def run_policy(env: CacheEnv, policy, epochs: int):
    """Drive a non-learning policy, yielding the same records as training
    runs (epsilon 0, loss nan)."""
    for t in range(epochs):
        action = policy.act(env)
        outcome = env.step(action)
        yield EpochRecord(epoch=t, reward=outcome.reward, cost=outcome.cost,
                          aoi_term=outcome.aoi_term, energy_term=outcome.energy_term,
                          action=action, epsilon=0.0, loss=float("nan"))


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean via prefix sums: out[i] covers values[i..i+window-1].

    Prefix sums accumulate in index order so any reimplementation that does
    the same reproduces these numbers bit for bit.
    """
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window > len(values):
        raise ValueError(f"window {window} exceeds series length {len(values)}")
    prefix = np.concatenate(([0.0], np.cumsum(values)))
    return (prefix[window:] - prefix[:-window]) / window


# ---------------------------------------------------------------------------
# policy evaluation over replications


@dataclass(frozen=True)
class EvalSummary:
    reward_mean: float
    reward_halfwidth: float
    cost_mean: float
    cost_halfwidth: float
    aoi_mean: float
    aoi_halfwidth: float
    energy_mean: float
    energy_halfwidth: float
    per_rep_reward: np.ndarray
    ma_series: list


def _halfwidth(per_rep: np.ndarray) -> float:
    n = len(per_rep)
    if n < 2:
        return float("nan")
    return float(stats.t.ppf(0.975, n - 1) * per_rep.std(ddof=1) / math.sqrt(n))


def evaluate_policy(env_factory: Callable[[int], CacheEnv],
                    policy_factory: Callable[[int], object],
                    epochs: int, replications: int,
                    window: Optional[int] = None) -> EvalSummary:
    """Run independent replications and summarize the final-window means of
    each metric with 95% confidence half-widths across replications."""
    if window is None:
        window = epochs
    if not 1 <= window <= epochs:
        raise ValueError(f"window must be in [1, {epochs}], got {window}")
    rewards, costs, aois, energies, ma_series = [], [], [], [], []
    for rep in range(replications):
        env = env_factory(rep)
        policy = policy_factory(rep)
        rec = list(policy.run(env, epochs))
        r = np.array([x.reward for x in rec])
        rewards.append(r[-window:].mean())
        costs.append(np.array([x.cost for x in rec])[-window:].mean())
        aois.append(np.array([x.aoi_term for x in rec])[-window:].mean())
        energies.append(np.array([x.energy_term for x in rec])[-window:].mean())
        ma_series.append(moving_average(r, window))
    rewards = np.array(rewards)
    costs = np.array(costs)
    aois = np.array(aois)
    energies = np.array(energies)
    return EvalSummary(
        reward_mean=float(rewards.mean()), reward_halfwidth=_halfwidth(rewards),
        cost_mean=float(costs.mean()), cost_halfwidth=_halfwidth(costs),
        aoi_mean=float(aois.mean()), aoi_halfwidth=_halfwidth(aois),
        energy_mean=float(energies.mean()), energy_halfwidth=_halfwidth(energies),
        per_rep_reward=rewards, ma_series=ma_series,
    )


# ---------------------------------------------------------------------------
# exact solver on tiny instances


@dataclass(frozen=True)
class TinyMdpSpec:
    """Enumerable cache-update MDP: frozen request distribution with finite
    support, deterministic age dynamics."""

    num_sensors: int
    t_max: int
    request_vectors: np.ndarray  # (K, F) int counts
    request_probs: np.ndarray  # (K,) summing to 1
    eta: float
    update_energy_j: np.ndarray  # (F,)
    discount: float

    def __post_init__(self):
        if not 1 <= self.num_sensors <= 3:
            raise ValueError(f"num_sensors must be in [1, 3], got {self.num_sensors}")
        if not 1 <= self.t_max <= 6:
            raise ValueError(f"t_max must be in [1, 6], got {self.t_max}")
        if self.request_vectors.shape[1] != self.num_sensors:
            raise ValueError("request_vectors width must equal num_sensors")
        if abs(float(self.request_probs.sum()) - 1.0) > 1e-9:
            raise ValueError("request_probs must sum to 1")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")

    @property
    def num_age_states(self) -> int:
        return self.t_max ** self.num_sensors

    @property
    def state_count(self) -> int:
        return self.num_age_states * len(self.request_vectors)

    @classmethod
    def from_zipf(cls, num_sensors: int, t_max: int, num_users: int, skew: float,
                  ranks, eta: float, update_energy_j, discount: float) -> "TinyMdpSpec":
        """Exact multinomial request support for a frozen Zipf law."""
        probs = zipf_probabilities(np.asarray(ranks), skew)
        vectors, weights = [], []
        for combo in itertools.product(range(num_users + 1), repeat=num_sensors):
            if sum(combo) != num_users:
                continue
            coef = math.factorial(num_users)
            for c in combo:
                coef //= math.factorial(c)
            weight = float(coef) * float(np.prod(probs ** np.array(combo)))
            vectors.append(combo)
            weights.append(weight)
        return cls(num_sensors=num_sensors, t_max=t_max,
                   request_vectors=np.array(vectors, dtype=int),
                   request_probs=np.array(weights), eta=eta,
                   update_energy_j=np.asarray(update_energy_j, dtype=float),
                   discount=discount)


def _enumerate_ages(spec: TinyMdpSpec) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(1, spec.t_max + 1)] * spec.num_sensors), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _age_index(spec: TinyMdpSpec, aoi) -> int:
    idx = 0
    for v in aoi:
        idx = idx * spec.t_max + (int(v) - 1)
    return idx


def _transition_tables(spec: TinyMdpSpec):
    """Deterministic age successor per action and the expected next-epoch
    weighted age of every age vector under the request law."""
    ages = _enumerate_ages(spec)
    n_o = ages.shape[0]
    num_actions = spec.num_sensors + 1
    next_idx = np.empty((n_o, num_actions), dtype=int)
    for o in range(n_o):
        for action in range(num_actions):
            next_idx[o, action] = _age_index(spec, advance_aoi(ages[o], action, spec.t_max))
    totals = spec.request_vectors.sum(axis=1)
    safe = np.where(totals > 0, totals, 1)
    # (n_o, K) realized weighted age, zero rows where nobody asked
    avg_age = (ages @ spec.request_vectors.T) / safe
    avg_age[:, totals == 0] = 0.0
    expected_age = avg_age @ spec.request_probs
    return ages, next_idx, avg_age, expected_age


@dataclass
class ViSolution:
    spec: TinyMdpSpec
    ages: np.ndarray  # (n_o, F) enumerated age vectors
    q_values: np.ndarray  # (n_o, F+1)
    values: np.ndarray  # (n_o,)
    greedy: np.ndarray  # (n_o,) actions
    iterations: int
    deltas: np.ndarray  # sup-norm change per sweep

    def age_index(self, aoi) -> int:
        return _age_index(self.spec, aoi)

    def greedy_action(self, aoi, requests=None) -> int:
        # optimal play is independent of the current requests: the action
        # only shapes the next ages, and future requests are drawn iid
        return int(self.greedy[self.age_index(aoi)])

    def optimal_return(self) -> float:
        """Value of the fresh-start state (all ages 1)."""
        return float(self.values[self.age_index([1] * self.spec.num_sensors)])


def bellman_backup(spec: TinyMdpSpec, values: np.ndarray, tables=None) -> np.ndarray:
    """Action values from one optimality backup of an age-space value table."""
    if tables is None:
        tables = _transition_tables(spec)
    _, next_idx, _, expected_age = tables
    action_energy = np.concatenate(([0.0], spec.eta * spec.update_energy_j))
    return -(expected_age[next_idx] + action_energy) + spec.discount * values[next_idx]


def value_iteration(spec: TinyMdpSpec, tolerance: float = 1e-9,
                    max_sweeps: int = 200_000) -> ViSolution:
    """Iterate the optimality backup to sup-norm convergence; the discount
    below 1 guarantees contraction."""
    if spec.state_count > 1_000_000:
        raise ValueError(f"state space too large to enumerate: {spec.state_count}")
    tables = _transition_tables(spec)
    ages = tables[0]
    values = np.zeros(ages.shape[0])
    deltas = []
    for sweep in range(max_sweeps):
        new_values = bellman_backup(spec, values, tables).max(axis=1)
        delta = float(np.max(np.abs(new_values - values)))
        deltas.append(delta)
        values = new_values
        if delta < tolerance:
            break
    else:
        raise RuntimeError(f"value iteration did not converge in {max_sweeps} sweeps")
    q = bellman_backup(spec, values, tables)
    return ViSolution(spec=spec, ages=ages, q_values=q, values=q.max(axis=1),
                      greedy=q.argmax(axis=1).astype(int), iterations=sweep + 1,
                      deltas=np.array(deltas))


def evaluate_policy_exact(spec: TinyMdpSpec, policy_fn, tolerance: float = 1e-9,
                          max_sweeps: int = 200_000) -> float:
    """Exact discounted return of a deterministic policy from the fresh
    start, marginalized over the initial request draw.

    policy_fn(age_vector, request_vector) -> action. Unlike the optimal
    policy, an arbitrary policy may condition on the requests, so the
    evaluation runs on the joint (ages, requests) chain.
    """
    ages, next_idx, avg_age, _ = _transition_tables(spec)
    n_o, num_k = avg_age.shape
    actions = np.empty((n_o, num_k), dtype=int)
    for o in range(n_o):
        for k in range(num_k):
            actions[o, k] = policy_fn(ages[o], spec.request_vectors[k])
    succ = next_idx[np.arange(n_o)[:, None], actions]  # (n_o, K)
    action_energy = np.concatenate(([0.0], spec.eta * spec.update_energy_j))
    # expected immediate reward: realized next ages, averaged over the next
    # request draw, plus the energy paid for the chosen action
    expected_age = avg_age @ spec.request_probs
    reward = -(expected_age[succ] + action_energy[actions])
    values = np.zeros((n_o, num_k))
    for _ in range(max_sweeps):
        vbar = values @ spec.request_probs
        new_values = reward + spec.discount * vbar[succ]
        delta = float(np.max(np.abs(new_values - values)))
        values = new_values
        if delta < tolerance:
            break
    else:
        raise RuntimeError(f"policy evaluation did not converge in {max_sweeps} sweeps")
    start = _age_index(spec, [1] * spec.num_sensors)
    return float(values[start] @ spec.request_probs)


def rollout_return(env: CacheEnv, policy, epochs: int, discount: float) -> float:
    """Discounted return of one truncated rollout."""
    total = 0.0
    weight = 1.0
    for rec in run_policy(env, policy, epochs):
        total += weight * rec.reward
        weight *= discount
    return total
