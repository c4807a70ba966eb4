"""Experiment orchestration: JSON config with strict validation, scenario
generation, seeded (optionally parallel) replications, and CSV outputs.

One invocation runs one policy over an eta list x replication grid. Every
random stream is derived from the single experiment seed, so reruns with
the same config are byte-identical; replications are independent and can
fan out to worker processes without changing any output.
"""

from __future__ import annotations

import dataclasses
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from .agent import AgentConfig, DqnAgent, serialize_agent
from .env import CacheEnv, EnvConfig
from .policies import (DqnPolicy, MpuPolicy, OuPolicy, RuPolicy, TinyMdpSpec,
                       moving_average, POLICY_KINDS)
from .radio import (EnergyTable, RadioConfig, SensorProfile, avg_energy,
                    avg_energy_alt_form, build_energy_table, db_to_linear,
                    dbm_to_watts, mc_energy, mean_snr, outage_probability,
                    path_gain_sq_from_distance)

RAW_HEADER = "epoch,rep,reward,cost,aoi,energy_j,action,epsilon,loss"


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "seed": 0,
    "profile": None,
    # environment
    "num_sensors": 20,
    "t_max": 100,
    "eta": 1.0,
    "num_users": 100,
    "variable_users": False,
    "skew_set": [0.5, 1.0, 1.5, 2.0],
    "p_shuffle": 0.1,
    "p_skew": 0.05,
    # radio and scenario geometry
    "bandwidth_hz": 1.0e7,
    "noise_psd_dbm_hz": -172.0,
    "tx_power_dbm": 20.0,
    "snr_threshold_db": 3.0,
    "radius_m": 100.0,
    "content_size_range_mb": [50.0, 100.0],
    "sensors": None,  # explicit [{distance_m, size_mb, tx_power_dbm?}] overrides generation
    # agent
    "discount": 0.99,
    "learning_rate": 0.001,
    "epsilon_start": 0.9,
    "epsilon_decay": 0.995,
    "epsilon_min": 0.05,
    "batch_size": 100,
    "target_sync": 100,
    "buffer_capacity": 5000,
    "hidden_sizes": [512, 256, 128],
    "optimizer": "sgd",
    "grad_clip_norm": None,
    # run shape
    "policy": "dqn",
    "epochs": 200_000,
    "replications": 1,
    "eta_sweep": None,
    "ma_window": 10_000,
    "summary_window": 10_000,
    "checkpoint_every": 0,
    "workers": 1,
    "out_dir": "runs",
    # tiny-instance exact solver
    "tiny_num_sensors": 2,
    "tiny_t_max": 4,
    "tiny_num_users": 3,
    "tiny_skew": 1.0,
    "tiny_eta": 1.0,
    "tiny_energy_j": [0.4, 0.8],
    "tiny_discount": 0.99,
    "tiny_tolerance": 1e-9,
}

# presets: desk keeps the full pipeline minutes-scale, paper is the
# full-size reference setup (long horizon, large network)
PROFILES = {
    "desk": {"num_sensors": 10, "hidden_sizes": [128, 64], "epochs": 50_000},
    "paper": {"num_sensors": 20, "hidden_sizes": [512, 256, 128], "epochs": 200_000},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration; field names match the JSON schema."""

    seed: int
    profile: Optional[str]
    num_sensors: int
    t_max: int
    eta: float
    num_users: int
    variable_users: bool
    skew_set: tuple
    p_shuffle: float
    p_skew: float
    bandwidth_hz: float
    noise_psd_dbm_hz: float
    tx_power_dbm: float
    snr_threshold_db: float
    radius_m: float
    content_size_range_mb: tuple
    sensors: Optional[tuple]
    discount: float
    learning_rate: float
    epsilon_start: float
    epsilon_decay: float
    epsilon_min: float
    batch_size: int
    target_sync: int
    buffer_capacity: int
    hidden_sizes: tuple
    optimizer: str
    grad_clip_norm: Optional[float]
    policy: str
    epochs: int
    replications: int
    eta_sweep: Optional[tuple]
    ma_window: int
    summary_window: int
    checkpoint_every: int
    workers: int
    out_dir: str
    tiny_num_sensors: int
    tiny_t_max: int
    tiny_num_users: int
    tiny_skew: float
    tiny_eta: float
    tiny_energy_j: tuple
    tiny_discount: float
    tiny_tolerance: float

    # -- derived views -------------------------------------------------------

    def radio_config(self) -> RadioConfig:
        return RadioConfig(
            bandwidth_hz=self.bandwidth_hz,
            noise_psd_w_hz=dbm_to_watts(self.noise_psd_dbm_hz),
            snr_threshold=db_to_linear(self.snr_threshold_db),
        )

    def env_config(self, eta: float, seed: int) -> EnvConfig:
        return EnvConfig(
            num_sensors=self.num_sensors, t_max=self.t_max, eta=eta,
            num_users=self.num_users, skew_set=self.skew_set,
            p_shuffle=self.p_shuffle, p_skew=self.p_skew, seed=seed,
            variable_users=self.variable_users,
        )

    def agent_config(self, seed: int) -> AgentConfig:
        return AgentConfig(
            discount=self.discount, learning_rate=self.learning_rate,
            epsilon_start=self.epsilon_start, epsilon_decay=self.epsilon_decay,
            epsilon_min=self.epsilon_min, batch_size=self.batch_size,
            target_sync=self.target_sync, buffer_capacity=self.buffer_capacity,
            hidden_sizes=self.hidden_sizes, optimizer=self.optimizer,
            grad_clip_norm=self.grad_clip_norm, seed=seed,
        )

    def tiny_spec(self) -> TinyMdpSpec:
        ranks = tuple(range(1, self.tiny_num_sensors + 1))
        return TinyMdpSpec.from_zipf(
            num_sensors=self.tiny_num_sensors, t_max=self.tiny_t_max,
            num_users=self.tiny_num_users, skew=self.tiny_skew, ranks=ranks,
            eta=self.tiny_eta, update_energy_j=np.asarray(self.tiny_energy_j),
            discount=self.tiny_discount,
        )

    def etas(self) -> tuple:
        return self.eta_sweep if self.eta_sweep else (self.eta,)

    def to_json_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        if out["sensors"] is not None:
            out["sensors"] = [dict(s) for s in self.sensors]
        return out


def _validate(merged: dict) -> None:
    def positive(name, allow_zero=False):
        v = merged[name]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{name} must be a number, got {v!r}")
        if v < 0 or (v == 0 and not allow_zero):
            raise ConfigError(f"{name} must be positive, got {v}")

    def probability(name):
        v = merged[name]
        if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} must be in [0, 1], got {v!r}")

    def count(name, minimum=1):
        v = merged[name]
        if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
            raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")

    count("seed", minimum=0)
    if merged["profile"] is not None and merged["profile"] not in PROFILES:
        raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {merged['profile']!r}")
    count("num_sensors")
    count("t_max")
    positive("eta", allow_zero=True)
    count("num_users", minimum=0)
    if not merged["skew_set"] or any(k < 0 for k in merged["skew_set"]):
        raise ConfigError(f"skew_set must be non-empty with values >= 0, got {merged['skew_set']!r}")
    probability("p_shuffle")
    probability("p_skew")
    positive("bandwidth_hz")
    positive("radius_m")
    rng_mb = merged["content_size_range_mb"]
    if (len(rng_mb) != 2 or rng_mb[0] <= 0 or rng_mb[1] < rng_mb[0]):
        raise ConfigError(f"content_size_range_mb must be [lo, hi] with 0 < lo <= hi, got {rng_mb!r}")
    if merged["sensors"] is not None:
        for i, entry in enumerate(merged["sensors"]):
            if "distance_m" not in entry or "size_mb" not in entry:
                raise ConfigError(f"sensors[{i}] needs distance_m and size_mb")
            if entry["distance_m"] <= 0 or entry["size_mb"] <= 0:
                raise ConfigError(f"sensors[{i}] distance_m and size_mb must be positive")
        if len(merged["sensors"]) != merged["num_sensors"]:
            raise ConfigError(
                f"sensors lists {len(merged['sensors'])} entries, num_sensors is {merged['num_sensors']}")
    if not 0.0 <= merged["discount"] < 1.0:
        raise ConfigError(f"discount must be in [0, 1), got {merged['discount']!r}")
    positive("learning_rate")
    probability("epsilon_start")
    probability("epsilon_min")
    if not 0.0 < merged["epsilon_decay"] <= 1.0:
        raise ConfigError(f"epsilon_decay must be in (0, 1], got {merged['epsilon_decay']!r}")
    count("batch_size")
    count("target_sync")
    count("buffer_capacity")
    if merged["batch_size"] > merged["buffer_capacity"]:
        raise ConfigError("batch_size must not exceed buffer_capacity")
    if not merged["hidden_sizes"] or any((not isinstance(h, int)) or h < 1
                                         for h in merged["hidden_sizes"]):
        raise ConfigError(f"hidden_sizes must be positive integers, got {merged['hidden_sizes']!r}")
    if merged["optimizer"] not in ("sgd", "adam"):
        raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {merged['optimizer']!r}")
    if merged["grad_clip_norm"] is not None and merged["grad_clip_norm"] <= 0:
        raise ConfigError(f"grad_clip_norm must be positive, got {merged['grad_clip_norm']!r}")
    runnable = tuple(k for k in POLICY_KINDS if k != "vi")
    if merged["policy"] not in runnable:
        raise ConfigError(f"policy must be one of {runnable}, got {merged['policy']!r}")
    count("epochs")
    count("replications")
    if merged["eta_sweep"] is not None:
        sweep = merged["eta_sweep"]
        if not sweep or any(e < 0 for e in sweep):
            raise ConfigError(f"eta_sweep must be a non-empty list of values >= 0, got {sweep!r}")
        if len(set(float(e) for e in sweep)) != len(sweep):
            raise ConfigError(f"eta_sweep values must be distinct, got {sweep!r}")
    count("ma_window")
    count("summary_window")
    count("checkpoint_every", minimum=0)
    count("workers")
    count("tiny_num_sensors")
    count("tiny_t_max")
    count("tiny_num_users", minimum=0)
    positive("tiny_skew", allow_zero=True)
    positive("tiny_eta", allow_zero=True)
    if len(merged["tiny_energy_j"]) != merged["tiny_num_sensors"]:
        raise ConfigError("tiny_energy_j must list one energy per tiny sensor")
    if not 0.0 <= merged["tiny_discount"] < 1.0:
        raise ConfigError(f"tiny_discount must be in [0, 1), got {merged['tiny_discount']!r}")
    positive("tiny_tolerance")


def resolve_config(values: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Merge defaults, profile preset, file values, and CLI overrides (in
    that order), validate, and freeze."""
    unknown = sorted(set(values) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = sorted(set(overrides) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown override keys: {', '.join(unknown)}")
    profile = overrides.get("profile", values.get("profile", DEFAULTS["profile"]))
    merged = dict(DEFAULTS)
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {profile!r}")
        merged.update(PROFILES[profile])
        merged["profile"] = profile
    merged.update(values)
    merged.update(overrides)
    merged["profile"] = profile
    _validate(merged)
    for key in ("skew_set", "content_size_range_mb", "hidden_sizes", "tiny_energy_j"):
        merged[key] = tuple(merged[key])
    if merged["eta_sweep"] is not None:
        merged["eta_sweep"] = tuple(float(e) for e in merged["eta_sweep"])
    if merged["sensors"] is not None:
        merged["sensors"] = tuple(dict(s) for s in merged["sensors"])
    merged["eta"] = float(merged["eta"])
    return ExperimentConfig(**merged)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            values = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: top-level value must be a JSON object")
    return resolve_config(values, overrides)


def derive_seed(base: int, *tags) -> int:
    """Stable 64-bit stream seed for a named purpose under one experiment."""
    parts = [base] + [zlib.crc32(str(t).encode("utf-8")) for t in tags]
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    profiles: tuple
    energy_table: EnergyTable
    metadata: dict


def build_scenario(config: ExperimentConfig) -> Scenario:
    """Place sensors, derive channel gains and per-update energies, and
    record every derived per-sensor value for auditability."""
    radio_cfg = config.radio_config()
    tx_power_w = dbm_to_watts(config.tx_power_dbm)
    rng = np.random.default_rng(derive_seed(config.seed, "scenario"))
    entries = []
    if config.sensors is not None:
        for s in config.sensors:
            entries.append((float(s["distance_m"]), float(s["size_mb"]),
                            dbm_to_watts(float(s.get("tx_power_dbm", config.tx_power_dbm)))))
    else:
        for _ in range(config.num_sensors):
            # area-uniform placement in the disc
            distance = config.radius_m * math.sqrt(rng.uniform())
            size_mb = rng.uniform(*config.content_size_range_mb)
            entries.append((distance, size_mb, tx_power_w))
    profiles = tuple(
        SensorProfile(tx_power_w=power, path_gain_sq=path_gain_sq_from_distance(distance),
                      content_size_bits=size_mb * 8e6, distance_m=distance)
        for distance, size_mb, power in entries
    )
    table = build_energy_table(list(profiles), radio_cfg)
    sensors_meta = []
    for i, (profile, (distance, size_mb, power)) in enumerate(zip(profiles, entries)):
        beta = mean_snr(profile, radio_cfg)
        sensors_meta.append({
            "index": i + 1,
            "distance_m": distance,
            "size_mb": size_mb,
            "tx_power_w": power,
            "path_gain_sq": profile.path_gain_sq,
            "beta": beta,
            "outage_probability": outage_probability(beta, radio_cfg.snr_threshold),
            "avg_energy_j": float(table.avg_energy_j[i + 1]),
        })
    metadata = {
        "seed": config.seed,
        "radio": {
            "bandwidth_hz": radio_cfg.bandwidth_hz,
            "noise_psd_w_hz": radio_cfg.noise_psd_w_hz,
            "snr_threshold": radio_cfg.snr_threshold,
            "rate_threshold": table.rate_threshold,
        },
        "sensors": sensors_meta,
        "energy_table_j": [float(e) for e in table.avg_energy_j],
    }
    return Scenario(profiles=profiles, energy_table=table, metadata=metadata)


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class ReplicationResult:
    eta: float
    rep: int
    records: dict  # column name -> ndarray
    checkpoints: tuple = ()  # (label, serialized agent) pairs, dqn runs only


def _make_policy(config: ExperimentConfig, eta: float, rep: int, scenario: Scenario):
    name = config.policy
    if name == "dqn":
        agent_seed = derive_seed(config.seed, "agent", name, f"{eta:g}", rep)
        agent = DqnAgent(config.agent_config(agent_seed), config.num_sensors,
                         config.t_max, config.num_users)
        return DqnPolicy(agent)
    if name == "mpu":
        return MpuPolicy()
    if name == "ou":
        return OuPolicy()
    if name == "ru":
        return RuPolicy(np.random.default_rng(derive_seed(config.seed, "policy", name,
                                                          f"{eta:g}", rep)))
    raise ConfigError(f"policy {name!r} cannot be run directly")


def _run_replication(config: ExperimentConfig, scenario: Scenario, eta: float,
                     rep: int) -> ReplicationResult:
    env_seed = derive_seed(config.seed, "env", rep)
    env = CacheEnv(config.env_config(eta, env_seed), scenario.energy_table.avg_energy_j[1:])
    policy = _make_policy(config, eta, rep, scenario)
    n = config.epochs
    cols = {
        "epoch": np.empty(n, dtype=np.int64),
        "reward": np.empty(n), "cost": np.empty(n), "aoi": np.empty(n),
        "energy_j": np.empty(n), "action": np.empty(n, dtype=np.int64),
        "epsilon": np.empty(n), "loss": np.empty(n),
    }
    checkpoints = []
    for i, rec in enumerate(policy.run(env, n)):
        cols["epoch"][i] = rec.epoch
        cols["reward"][i] = rec.reward
        cols["cost"][i] = rec.cost
        cols["aoi"][i] = rec.aoi_term
        cols["energy_j"][i] = rec.energy_term
        cols["action"][i] = rec.action
        cols["epsilon"][i] = rec.epsilon
        cols["loss"][i] = rec.loss
        if (config.policy == "dqn" and config.checkpoint_every > 0
                and (i + 1) % config.checkpoint_every == 0 and i + 1 < n):
            checkpoints.append((f"ep{i + 1}", serialize_agent(policy.agent)))
    if config.policy == "dqn":
        checkpoints.append(("final", serialize_agent(policy.agent)))
    return ReplicationResult(eta=eta, rep=rep, records=cols, checkpoints=tuple(checkpoints))


def _format_float(x: float) -> str:
    return "" if math.isnan(x) else format(x, ".17g")


def _write_raw_csv(path: Path, rep: int, cols: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(RAW_HEADER + "\n")
        n = len(cols["epoch"])
        for i in range(n):
            fh.write(",".join([
                str(int(cols["epoch"][i])), str(rep),
                _format_float(cols["reward"][i]), _format_float(cols["cost"][i]),
                _format_float(cols["aoi"][i]), _format_float(cols["energy_j"][i]),
                str(int(cols["action"][i])), _format_float(cols["epsilon"][i]),
                _format_float(cols["loss"][i]),
            ]) + "\n")


def _write_ma_csv(path: Path, rewards: np.ndarray, window: int) -> None:
    series = moving_average(rewards, window)
    with open(path, "w", newline="") as fh:
        fh.write("epoch,ma_reward\n")
        for i, value in enumerate(series):
            fh.write(f"{i + window - 1},{_format_float(float(value))}\n")


def _ci95_halfwidth(values: np.ndarray) -> float:
    if len(values) < 2:
        return float("nan")
    return float(stats.t.ppf(0.975, len(values) - 1) * values.std(ddof=1)
                 / math.sqrt(len(values)))


SUMMARY_HEADER = ("policy,eta,replications,epochs,window,window_clamped,"
                  "reward_mean,reward_ci95,cost_mean,cost_ci95,"
                  "aoi_mean,aoi_ci95,energy_j_mean,energy_j_ci95")


def run_experiment(config: ExperimentConfig, echo=print) -> dict:
    """Execute the configured policy over the eta grid and write all
    artifacts; returns the summary rows keyed by (policy, eta)."""
    out = Path(config.out_dir)
    (out / "raw").mkdir(parents=True, exist_ok=True)
    (out / "ma").mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(config)
    with open(out / "config.json", "w") as fh:
        json.dump(config.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "scenario.json", "w") as fh:
        json.dump(scenario.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")

    ma_window = min(config.ma_window, config.epochs)
    summary_window = min(config.summary_window, config.epochs)
    if ma_window != config.ma_window:
        echo(f"note: ma_window clamped to run length {ma_window}")
    if summary_window != config.summary_window:
        echo(f"note: summary_window clamped to run length {summary_window}")

    tasks = [(eta, rep) for eta in config.etas() for rep in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_replication, config, scenario, eta, rep)
                       for eta, rep in tasks]
            results = [f.result() for f in futures]
    else:
        results = [_run_replication(config, scenario, eta, rep) for eta, rep in tasks]

    by_eta = {}
    for res in results:
        by_eta.setdefault(res.eta, []).append(res)

    summary_rows = {}
    clamped = 1 if summary_window != config.summary_window else 0
    with open(out / "summary.csv", "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for eta in config.etas():
            group = sorted(by_eta[eta], key=lambda r: r.rep)
            metric_means = {}
            for metric in ("reward", "cost", "aoi", "energy_j"):
                metric_means[metric] = np.array(
                    [res.records[metric][-summary_window:].mean() for res in group])
            row = {
                "policy": config.policy, "eta": eta,
                "replications": config.replications, "epochs": config.epochs,
                "window": summary_window, "window_clamped": clamped,
            }
            for metric in ("reward", "cost", "aoi", "energy_j"):
                row[f"{metric}_mean"] = float(metric_means[metric].mean())
                row[f"{metric}_ci95"] = _ci95_halfwidth(metric_means[metric])
            summary_rows[(config.policy, eta)] = row
            fh.write(",".join([
                row["policy"], format(eta, "g"), str(row["replications"]),
                str(row["epochs"]), str(row["window"]), str(row["window_clamped"]),
                _format_float(row["reward_mean"]), _format_float(row["reward_ci95"]),
                _format_float(row["cost_mean"]), _format_float(row["cost_ci95"]),
                _format_float(row["aoi_mean"]), _format_float(row["aoi_ci95"]),
                _format_float(row["energy_j_mean"]), _format_float(row["energy_j_ci95"]),
            ]) + "\n")

    for res in results:
        stem = f"{config.policy}_eta{res.eta:g}_rep{res.rep}"
        _write_raw_csv(out / "raw" / f"{stem}.csv", res.rep, res.records)
        _write_ma_csv(out / "ma" / f"{stem}.csv", res.records["reward"], ma_window)
        if res.checkpoints:
            ckpt_dir = out / "checkpoints"
            ckpt_dir.mkdir(exist_ok=True)
            for label, blob in res.checkpoints:
                (ckpt_dir / f"{stem}_{label}.ckpt").write_bytes(blob)

    echo(f"wrote {len(results)} replication(s) under {out}")
    return summary_rows


# ---------------------------------------------------------------------------
# energy model validation


ENERGY_REPORT_HEADER = ("sensor,distance_m,size_mb,beta,outage_probability,"
                        "energy_j,energy_alt_j,energy_mc_j,mc_std_err_j,"
                        "rel_dev_closed_vs_mc,alt_over_closed")


def validate_energy_model(config: ExperimentConfig, n_samples: int = 1_000_000,
                          out_path=None, tolerance: float = 0.01) -> dict:
    """Compare the closed-form energy, its unscaled variant, and the
    Monte-Carlo estimate for every sensor in the scenario."""
    scenario = build_scenario(config)
    radio_cfg = config.radio_config()
    rows = []
    worst = 0.0
    for i, profile in enumerate(scenario.profiles):
        rng = np.random.default_rng(derive_seed(config.seed, "energy-mc", i))
        closed = avg_energy(profile, radio_cfg)
        alt = avg_energy_alt_form(profile, radio_cfg)
        est = mc_energy(profile, radio_cfg, n_samples, rng)
        rel = abs(closed - est.energy_j) / closed if not est.all_outage else float("inf")
        worst = max(worst, rel)
        beta = mean_snr(profile, radio_cfg)
        rows.append({
            "sensor": i + 1,
            "distance_m": profile.distance_m,
            "size_mb": profile.content_size_bits / 8e6,
            "beta": beta,
            "outage_probability": outage_probability(beta, radio_cfg.snr_threshold),
            "energy_j": closed,
            "energy_alt_j": alt,
            "energy_mc_j": est.energy_j,
            "mc_std_err_j": est.std_err_j,
            "rel_dev_closed_vs_mc": rel,
            "alt_over_closed": alt / closed,
            "all_outage": est.all_outage,
        })
    report = {
        "n_samples": n_samples,
        "tolerance": tolerance,
        "max_rel_dev": worst,
        "passed": worst <= tolerance,
        "sensors": rows,
    }
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            fh.write(ENERGY_REPORT_HEADER + "\n")
            for row in rows:
                fh.write(",".join([
                    str(row["sensor"]), _format_float(row["distance_m"]),
                    _format_float(row["size_mb"]), _format_float(row["beta"]),
                    _format_float(row["outage_probability"]),
                    _format_float(row["energy_j"]), _format_float(row["energy_alt_j"]),
                    _format_float(row["energy_mc_j"]), _format_float(row["mc_std_err_j"]),
                    _format_float(row["rel_dev_closed_vs_mc"]),
                    _format_float(row["alt_over_closed"]),
                ]) + "\n")
    return report
