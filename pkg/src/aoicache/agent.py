"""DQN agent: epsilon-greedy acting, FIFO replay, and Q-network training
against a periodically synchronized frozen target network.

One agent owns one environment's loop. Ages are scaled by t_max and request
counts by the user budget before they reach the network, so inputs stay in
[0, 1] regardless of scenario size.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict
from typing import NamedTuple, Optional

import numpy as np

from .env import CacheEnv, MdpState
from . import neural
from .neural import MlpParameters


@dataclass(frozen=True)
class Transition:
    state: MdpState
    action: int
    next_state: MdpState
    reward: float


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.99
    learning_rate: float = 0.001
    epsilon_start: float = 0.9
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.05
    batch_size: int = 100
    target_sync: int = 100
    buffer_capacity: int = 5000
    hidden_sizes: tuple = (512, 256, 128)
    optimizer: str = "sgd"
    grad_clip_norm: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.epsilon_min <= self.epsilon_start <= 1.0:
            raise ValueError(
                f"need 0 <= epsilon_min <= epsilon_start <= 1, got "
                f"{self.epsilon_min}, {self.epsilon_start}")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError(f"epsilon_decay must be in (0, 1], got {self.epsilon_decay}")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("batch_size and buffer_capacity must be >= 1")
        if self.batch_size > self.buffer_capacity:
            raise ValueError(
                f"batch_size {self.batch_size} exceeds buffer_capacity {self.buffer_capacity}")
        if self.target_sync < 1:
            raise ValueError(f"target_sync must be >= 1, got {self.target_sync}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0.0:
            raise ValueError(f"grad_clip_norm must be positive, got {self.grad_clip_norm}")


def encode_state(state: MdpState, t_max: int, num_users: int) -> np.ndarray:
    """Flatten to [aoi / t_max, requests / num_users], all in [0, 1]."""
    scale = max(num_users, 1)
    return np.concatenate((np.asarray(state.aoi, dtype=float) / t_max,
                           np.asarray(state.requests, dtype=float) / scale))


def decay_epsilon(epsilon: float, decay: float, epsilon_min: float) -> float:
    return max(epsilon * decay, epsilon_min)


def select_action(qnet: MlpParameters, state: MdpState, epsilon: float,
                  rng: np.random.Generator, *, t_max: int, num_users: int) -> int:
    """Uniform random action with probability epsilon, else the greedy head
    (ties to the lowest action index)."""
    num_actions = qnet.layer_sizes[-1]
    if rng.random() < epsilon:
        return int(rng.integers(num_actions))
    q = neural.forward(qnet, encode_state(state, t_max, num_users))
    return int(np.argmax(q))


def compute_target(target_net: MlpParameters, transition: Transition, discount: float,
                   *, t_max: int, num_users: int) -> float:
    """Bootstrap target r + gamma * max_a Q_target(s', a); the task is
    continuing, so there is no terminal cutoff."""
    q = neural.forward(target_net, encode_state(transition.next_state, t_max, num_users))
    return transition.reward + discount * float(np.max(q))


def maybe_sync_target(qnet: MlpParameters, target_net: MlpParameters, t: int, t0: int) -> bool:
    """Copy online weights into the target every t0 epochs (including t=0)."""
    if t0 < 1:
        raise ValueError(f"t0 must be >= 1, got {t0}")
    if t % t0 == 0:
        neural.clone_into(qnet, target_net)
        return True
    return False


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions backed by ring arrays: once full,
    each insert evicts exactly the oldest entry."""

    def __init__(self, capacity: int, num_sensors: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._aoi = np.empty((capacity, num_sensors), dtype=np.int32)
        self._req = np.empty((capacity, num_sensors), dtype=np.int32)
        self._next_aoi = np.empty((capacity, num_sensors), dtype=np.int32)
        self._next_req = np.empty((capacity, num_sensors), dtype=np.int32)
        self._action = np.empty(capacity, dtype=np.int32)
        self._reward = np.empty(capacity, dtype=float)
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, transition: Transition) -> None:
        i = self._cursor
        self._aoi[i] = transition.state.aoi
        self._req[i] = transition.state.requests
        self._next_aoi[i] = transition.next_state.aoi
        self._next_req[i] = transition.next_state.requests
        self._action[i] = transition.action
        self._reward[i] = transition.reward
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def transition_at(self, j: int) -> Transition:
        """j-th stored transition in insertion order, 0 = oldest."""
        if not 0 <= j < self._size:
            raise IndexError(j)
        i = (self._cursor - self._size + j) % self.capacity
        return Transition(
            state=MdpState(aoi=self._aoi[i].copy(), requests=self._req[i].copy()),
            action=int(self._action[i]),
            next_state=MdpState(aoi=self._next_aoi[i].copy(), requests=self._next_req[i].copy()),
            reward=float(self._reward[i]),
        )

    def sample_indices(self, batch_size: int, rng: np.random.Generator):
        """Uniform with replacement; None while warming up (not an error)."""
        if self._size < batch_size:
            return None
        return rng.integers(0, self._size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = self.sample_indices(batch_size, rng)
        if idx is None:
            return None
        return [self.transition_at(int(j)) for j in idx]

    def gather(self, idx: np.ndarray):
        """Raw columns for a sampled index batch (insertion-order indices)."""
        if self._size == self.capacity:
            pos = (self._cursor + idx) % self.capacity
        else:
            pos = idx
        return (self._aoi[pos], self._req[pos], self._next_aoi[pos], self._next_req[pos],
                self._action[pos], self._reward[pos])


def train_step(qnet: MlpParameters, target_net: MlpParameters, buffer: ReplayBuffer,
               config: AgentConfig, rng: np.random.Generator, *, t_max: int, num_users: int,
               adam_state: Optional[neural.AdamState] = None):
    """One mini-batch update; returns the batch loss, or None while the
    buffer is still warming up."""
    idx = buffer.sample_indices(config.batch_size, rng)
    if idx is None:
        return None
    aoi, req, next_aoi, next_req, actions, rewards = buffer.gather(idx)
    scale = float(max(num_users, 1))
    m = len(idx)
    width = aoi.shape[1]
    states = np.empty((m, 2 * width))
    states[:, :width] = aoi / t_max
    states[:, width:] = req / scale
    next_states = np.empty((m, 2 * width))
    next_states[:, :width] = next_aoi / t_max
    next_states[:, width:] = next_req / scale

    q_next = neural.forward(target_net, next_states).max(axis=1)
    targets = rewards + config.discount * q_next
    loss, grads = neural.batch_loss_and_grads(qnet, states, actions, targets)
    if config.grad_clip_norm is not None:
        neural.clip_grads_(grads, config.grad_clip_norm)
    if config.optimizer == "adam":
        neural.adam_step(qnet, grads, adam_state, config.learning_rate)
    else:
        neural.sgd_step(qnet, grads, config.learning_rate)
    return loss


class DqnAgent:
    """Owns the online/target networks, the replay buffer, and the
    exploration schedule for one training run."""

    def __init__(self, config: AgentConfig, num_sensors: int, t_max: int, num_users: int):
        if num_sensors < 1:
            raise ValueError(f"num_sensors must be >= 1, got {num_sensors}")
        self.config = config
        self.num_sensors = num_sensors
        self.t_max = t_max
        self.num_users = num_users
        self.rng = np.random.default_rng(config.seed)
        sizes = (2 * num_sensors, *config.hidden_sizes, num_sensors + 1)
        self.qnet = neural.init_params(sizes, self.rng)
        self.target_net = neural.clone(self.qnet)
        self.buffer = ReplayBuffer(config.buffer_capacity, num_sensors)
        self.adam_state = neural.AdamState.for_params(self.qnet) if config.optimizer == "adam" else None
        self.epsilon = config.epsilon_start
        self.epoch = 0

    def act(self, state: MdpState) -> int:
        return select_action(self.qnet, state, self.epsilon, self.rng,
                             t_max=self.t_max, num_users=self.num_users)

    def greedy_action(self, state: MdpState) -> int:
        """Exploitation-only action; consumes no randomness."""
        q = neural.forward(self.qnet, encode_state(state, self.t_max, self.num_users))
        return int(np.argmax(q))

    def train(self):
        return train_step(self.qnet, self.target_net, self.buffer, self.config, self.rng,
                          t_max=self.t_max, num_users=self.num_users,
                          adam_state=self.adam_state)


class EpochRecord(NamedTuple):
    epoch: int
    reward: float
    cost: float
    aoi_term: float
    energy_term: float
    action: int
    epsilon: float
    loss: float  # nan when no training happened this epoch


def run_training(env: CacheEnv, agent: DqnAgent, epochs: int):
    """Drive act / observe / store / train / decay / sync for the requested
    number of epochs, yielding one record per epoch."""
    if agent.num_sensors != env.num_sensors:
        raise ValueError(
            f"agent built for {agent.num_sensors} sensors, env has {env.num_sensors}")
    if agent.t_max != env.config.t_max or agent.num_users != env.config.num_users:
        raise ValueError("agent and environment scaling parameters differ")
    for _ in range(epochs):
        t = agent.epoch
        epsilon_used = agent.epsilon
        state = env.state
        action = agent.act(state)
        outcome = env.step(action)
        agent.buffer.push(Transition(state, action, outcome.next_state, outcome.reward))
        loss = agent.train()
        agent.epsilon = decay_epsilon(agent.epsilon, agent.config.epsilon_decay,
                                      agent.config.epsilon_min)
        maybe_sync_target(agent.qnet, agent.target_net, t, agent.config.target_sync)
        agent.epoch = t + 1
        yield EpochRecord(epoch=t, reward=outcome.reward, cost=outcome.cost,
                          aoi_term=outcome.aoi_term, energy_term=outcome.energy_term,
                          action=action, epsilon=epsilon_used,
                          loss=float("nan") if loss is None else loss)


# ---------------------------------------------------------------------------
# agent checkpoints: JSON header (config + schedule position) followed by
# the two network payloads in the network checkpoint format.

AGENT_MAGIC = b"DQNCKPT\x00"
AGENT_VERSION = 1


def serialize_agent(agent: DqnAgent) -> bytes:
    header = {
        "config": asdict(agent.config),
        "num_sensors": agent.num_sensors,
        "t_max": agent.t_max,
        "num_users": agent.num_users,
        "epsilon": agent.epsilon,
        "epoch": agent.epoch,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    qnet_blob = neural.serialize_params(agent.qnet)
    target_blob = neural.serialize_params(agent.target_net)
    return b"".join([
        AGENT_MAGIC,
        struct.pack("<II", AGENT_VERSION, len(header_bytes)),
        header_bytes,
        struct.pack("<Q", len(qnet_blob)), qnet_blob,
        struct.pack("<Q", len(target_blob)), target_blob,
    ])


def save_agent(agent: DqnAgent, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_agent(agent))


def load_agent(path) -> DqnAgent:
    """Rebuild an agent from a checkpoint. Replay contents and rng position
    are not part of the format; a resumed run refills its buffer."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != AGENT_MAGIC:
        raise ValueError("not an agent checkpoint (bad magic)")
    version, header_len = struct.unpack_from("<II", data, 8)
    if version != AGENT_VERSION:
        raise ValueError(f"unsupported agent checkpoint version {version}")
    offset = 16
    header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    offset += header_len
    cfg_fields = dict(header["config"])
    cfg_fields["hidden_sizes"] = tuple(cfg_fields["hidden_sizes"])
    config = AgentConfig(**cfg_fields)
    agent = DqnAgent(config, header["num_sensors"], header["t_max"], header["num_users"])
    (qnet_len,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    qnet = neural.deserialize_params(data[offset:offset + qnet_len],
                                     expected_sizes=agent.qnet.layer_sizes)
    offset += qnet_len
    (target_len,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    target = neural.deserialize_params(data[offset:offset + target_len],
                                       expected_sizes=agent.qnet.layer_sizes)
    neural.clone_into(qnet, agent.qnet)
    neural.clone_into(target, agent.target_net)
    agent.epsilon = float(header["epsilon"])
    agent.epoch = int(header["epoch"])
    return agent
