"""Episode runner, replication aggregation, parameter sweeps and the
coverage experiment, plus CSV/JSON writers for their results.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import SimulationConfig
from .environments import (
    GaussianArmSpec,
    GaussianEnvironment,
    build_feature_environment,
    build_offline_pool,
)
from .errors import ConfigurationError, DomainError
from .estimator import ArmStatistics, confidence_width, estimate
from .policies import PolicyKind, new_policy, record, select_arm
from .stats_core import RandomStream, derive_stream_id, t_quantile

log = logging.getLogger(__name__)

SWEEP_AXES = ("N", "rho2", "Delta")


@dataclass
class RegretTrace:
    policy: str
    rep: int
    seed: int
    arms: np.ndarray
    cum_regret: np.ndarray

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1]) if self.cum_regret.size else 0.0

    def pull_counts(self, n_arms: int) -> np.ndarray:
        return np.bincount(self.arms, minlength=n_arms)


@dataclass
class Summary:
    policy: str
    mean: float
    sd: float
    ci95: float
    replications: int
    final_regrets: list = field(repr=False)
    param_name: str = "none"
    param_value: Optional[float] = None

    @classmethod
    def from_finals(cls, policy, finals, param_name="none", param_value=None) -> "Summary":
        finals = [float(f) for f in finals]
        r = len(finals)
        mean = math.fsum(finals) / r
        sd = math.sqrt(math.fsum((f - mean) ** 2 for f in finals) / (r - 1)) if r > 1 else 0.0
        return cls(str(policy), mean, sd, 1.96 * sd / math.sqrt(r), r, finals, param_name, param_value)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "param_name": self.param_name,
            "param_value": self.param_value,
            "mean": self.mean,
            "sd": self.sd,
            "ci95": self.ci95,
            "R": self.replications,
        }


def build_environment(config: SimulationConfig):
    if config.environment == "gaussian":
        return GaussianEnvironment(config.arms)
    f = config.feature
    return build_feature_environment(
        n_arms=f["n_arms"],
        noise_sigma=f["noise_sigma"],
        predictor=f["predictor"],
        train_size=f["train_size"],
        weight_low=f["weight_low"],
        weight_high=f["weight_high"],
        weight_seed=f["weight_seed"],
        base_seed=config.base_seed,
        predictor_options=config.predictor_options,
    )


def _episode_seed(config: SimulationConfig, rep: int) -> int:
    return derive_stream_id(config.base_seed, rep)


def run_episode(config: SimulationConfig, policy, rep: int, env=None) -> RegretTrace:
    """Play one episode of ``policy`` for ``config.horizon`` steps.

    Online draws and the offline pool come from streams keyed by
    (base_seed, rep, role, arm), so every policy sees the same data for the
    same replication.
    """
    kind = PolicyKind(policy)
    if env is None:
        env = build_environment(config)
    K, T, seed = env.n_arms, config.horizon, config.base_seed
    means = env.true_means
    gaps = means.max() - means

    online = []
    for k in range(K):
        r, rhat = env.draw_online(k, RandomStream.for_role(seed, rep, "online", k), T)
        online.append((r.tolist(), rhat.tolist()))
    pools = None
    if kind is PolicyKind.MLA:
        pools = build_offline_pool(
            env, config.offline_sizes,
            [RandomStream.for_role(seed, rep, "offline", k) for k in range(K)]).pools

    state = new_policy(kind, K, pools, config.known_sigmas)
    used = [0] * K
    arms = np.empty(T, dtype=np.int64)
    for step in range(T):
        k = select_arm(state)
        i = used[k]
        used[k] += 1
        record(state, k, online[k][0][i], online[k][1][i])
        arms[step] = k
    return RegretTrace(str(kind), rep, _episode_seed(config, rep), arms, np.cumsum(gaps[arms]))


def _episode_job(args):
    config, policy, rep, env = args
    return run_episode(config, policy, rep, env)


@dataclass
class ReplicationResult:
    summaries: list[Summary]
    traces: dict[str, list[RegretTrace]]


def run_replications(config: SimulationConfig, policies=None, threads: int = 1,
                     keep_traces: bool = False, env=None, param_name="none",
                     param_value=None) -> ReplicationResult:
    """Run ``config.replications`` episodes per policy and summarise final regrets."""
    policies = [PolicyKind(p) for p in (policies or config.policies)]
    if env is None:
        env = build_environment(config)
    jobs = [(config, p, rep, env) for p in policies for rep in range(config.replications)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(_episode_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        traces = [_episode_job(j) for j in jobs]

    summaries, kept = [], {}
    R = config.replications
    for i, p in enumerate(policies):
        chunk = traces[i * R:(i + 1) * R]
        summaries.append(Summary.from_finals(p, [t.final_regret for t in chunk], param_name, param_value))
        if keep_traces:
            kept[str(p)] = chunk
        log.info("%s: mean final regret %.3f +/- %.3f", p, summaries[-1].mean, summaries[-1].ci95)
    return ReplicationResult(summaries, kept)


def with_axis(config: SimulationConfig, axis: str, value: float) -> SimulationConfig:
    """Copy of ``config`` with one sweep parameter set."""
    if axis == "N":
        if value < 0 or value != int(value):
            raise ConfigurationError(f"offline size must be a nonnegative integer, got {value}", "sweep.grid")
        return config.replace(offline_sizes=(int(value),) * config.n_arms)
    if config.environment != "gaussian":
        raise ConfigurationError(f"axis {axis!r} needs the gaussian environment", "sweep.axis")
    if axis == "rho2":
        if not 0 <= value <= 1:
            raise ConfigurationError(f"rho2 must lie in [0, 1], got {value}", "sweep.grid")
        rho = math.sqrt(value)
        return config.replace(arms=tuple(GaussianArmSpec(a.mu, a.mu_tilde, a.sigma, a.sigma_tilde, rho)
                                         for a in config.arms))
    if axis == "Delta":
        if not value > 0:
            raise ConfigurationError(
                f"Delta must be positive so the optimal arm is unique, got {value}", "sweep.grid")
        rest = config.arms[1:]
        top = max((a.mu for a in rest), default=0.0) + value
        first = config.arms[0]
        arms = (GaussianArmSpec(top, first.mu_tilde, first.sigma, first.sigma_tilde, first.rho),) + rest
        return config.replace(arms=arms)
    raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}", "sweep.axis")


def sweep(config: SimulationConfig, axis: str, grid: Sequence[float], threads: int = 1,
          policies=None) -> list[Summary]:
    if not grid:
        raise ConfigurationError("sweep grid is empty", "sweep.grid")
    points = [with_axis(config, axis, v) for v in grid]  # validate everything up front
    env = build_environment(config) if config.environment == "feature" else None
    out = []
    for value, cfg in zip(grid, points):
        res = run_replications(cfg, policies, threads, env=env, param_name=axis, param_value=value)
        out.extend(res.summaries)
    return out


# --- coverage ---------------------------------------------------------------

_COVERAGE_CHUNK = 4_000_000  # floats per offline block


def miscoverage_rates(spec: GaussianArmSpec, n: int, n_offline: int, deltas: Sequence[float],
                      reps: int, stream: RandomStream) -> list[float]:
    """Fraction of simulated datasets whose upper bound falls below the true mean,
    one rate per entry of ``deltas`` (all computed on the same datasets).
    """
    if n < 4:
        raise DomainError(f"coverage needs n >= 4, got {n}")
    if n_offline < 0 or reps < 1:
        raise DomainError("need n_offline >= 0 and reps >= 1")
    for d in deltas:
        if not 0 < d < 0.5:
            raise DomainError(f"delta must lie in (0, 1/2), got {d}")
    env = GaussianEnvironment([spec])
    quantiles = np.array([t_quantile(n - 2, d) for d in deltas])
    misses = np.zeros(len(deltas), dtype=np.int64)
    chunk = max(1, min(reps, _COVERAGE_CHUNK // max(n_offline, n)))
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        r, h = env.draw_online(0, stream, m * n)
        r, h = r.reshape(m, n), h.reshape(m, n)
        off = env.draw_surrogates(0, stream, m * n_offline).reshape(m, n_offline)
        for i in range(m):
            est = estimate(ArmStatistics.from_samples(r[i], h[i], off[i]))
            misses += spec.mu > est.mla_mean + quantiles * confidence_width(est)
        done += m
    return (misses / reps).tolist()


def coverage_experiment(spec: GaussianArmSpec, n: int, n_offline: int, delta: float, reps: int,
                        stream: RandomStream) -> float:
    """Empirical probability that the true mean exceeds the 1 - 2 delta upper bound."""
    return miscoverage_rates(spec, n, n_offline, [delta], reps, stream)[0]


def coverage_tolerance(delta: float, reps: int) -> float:
    """2 delta plus three binomial standard errors."""
    p = 2 * delta
    return p + 3 * math.sqrt(p * (1 - p) / reps)


# --- writers ----------------------------------------------------------------


def write_results_csv(path, summaries: Sequence[Summary], horizon: int):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "param_name", "param_value", "rep", "T", "final_regret"])
        for s in summaries:
            pv = "" if s.param_value is None else repr(float(s.param_value))
            for rep, f in enumerate(s.final_regrets):
                w.writerow([s.policy, s.param_name, pv, rep, horizon, repr(float(f))])


def write_trace_csv(path, traces: dict[str, list[RegretTrace]]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "rep", "t", "arm", "cum_regret"])
        for policy, reps in traces.items():
            for tr in reps:
                for t, (arm, cr) in enumerate(zip(tr.arms.tolist(), tr.cum_regret.tolist()), start=1):
                    w.writerow([policy, tr.rep, t, arm, repr(float(cr))])


def write_summary_json(path, config: SimulationConfig, summaries: Sequence[Summary], extra=None):
    doc = {"config": config.to_dict(), "points": [s.to_dict() for s in summaries]}
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
