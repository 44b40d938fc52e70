"""Per-episode metrics, smoothing, convergence detection, aggregation."""

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EpisodeMetrics:
    episode: int
    steps: int
    reward: float  # winner's cumulative reward; mean over agents on timeout
    delta_q: float  # mean |Q - reference| over agents; nan without a reference
    alarms: int
    winner: int  # -1 on timeout
    asks: int
    responses: int
    gamma_counts: np.ndarray = field(default=None, repr=False)


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean with an expanding head: out[t] averages the last
    ``window`` points up to t (fewer near the start). window = 1 is the
    identity; constants are preserved exactly."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    out = np.empty_like(x)
    acc = 0.0
    for t in range(x.shape[0]):
        acc += x[t]
        if t >= window:
            acc -= x[t - window]
            out[t] = acc / window
        else:
            out[t] = acc / (t + 1)
    return out


def delta_q(current, reference) -> float:
    """Mean absolute elementwise difference between two Q tables (or stacks
    of them); zero iff identical."""
    cur = np.asarray(getattr(current, "values", current), dtype=np.float64)
    ref = np.asarray(getattr(reference, "values", reference), dtype=np.float64)
    if cur.shape != ref.shape:
        raise ValueError(f"shape mismatch {cur.shape} vs {ref.shape}")
    return float(np.mean(np.abs(cur - ref)))


def convergence_episode(series, threshold: float,
                        persistence: int = 50) -> int | None:
    """First index where the series drops below the threshold and stays
    below it for ``persistence`` consecutive points (or through the end of
    the series, when fewer remain). None when it never settles."""
    if persistence < 1:
        raise ValueError(f"persistence must be >= 1, got {persistence}")
    x = np.asarray(series, dtype=np.float64)
    below = x < threshold
    n = x.shape[0]
    start = 0
    streak = 0
    for t in range(n):
        if below[t]:
            if streak == 0:
                start = t
            streak += 1
            if streak >= min(persistence, n - start):
                return start
        else:
            streak = 0
    return None


@dataclass
class RunSummary:
    """Smoothed series and summary scalars for one run."""

    steps_smoothed: np.ndarray
    reward_smoothed: np.ndarray
    delta_q_smoothed: np.ndarray  # empty when the run had no reference
    convergence: int | None
    gamma_totals: np.ndarray
    terminal_steps: float
    terminal_reward: float


def summarize_run(episodes: list[EpisodeMetrics], window: int = 100,
                  convergence_threshold: float = 1e-6,
                  persistence: int = 50) -> RunSummary:
    """Smooth the per-episode series and locate convergence of the mean
    absolute table drift (when a reference was recorded)."""
    if not episodes:
        raise ValueError("no episodes to summarize")
    steps = moving_average([e.steps for e in episodes], window)
    reward = moving_average([e.reward for e in episodes], window)
    dq_raw = np.array([e.delta_q for e in episodes], dtype=np.float64)
    if np.all(np.isnan(dq_raw)):
        dq = np.empty(0)
        conv = None
    else:
        dq = moving_average(np.nan_to_num(dq_raw, nan=0.0), window)
        conv = convergence_episode(dq, convergence_threshold, persistence)
    cap = max((e.gamma_counts.shape[0] for e in episodes
               if e.gamma_counts is not None), default=0)
    gamma_totals = np.zeros(cap, dtype=np.int64)
    for e in episodes:
        if e.gamma_counts is not None:
            gamma_totals[:e.gamma_counts.shape[0]] += e.gamma_counts
    return RunSummary(steps_smoothed=steps, reward_smoothed=reward,
                      delta_q_smoothed=dq, convergence=conv,
                      gamma_totals=gamma_totals,
                      terminal_steps=float(steps[-1]),
                      terminal_reward=float(reward[-1]))


def aggregate_series(series_by_seed: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and population std across seeds (equal lengths)."""
    stack = np.stack([np.asarray(s, dtype=np.float64) for s in series_by_seed])
    return stack.mean(axis=0), stack.std(axis=0)


def ordering_fraction(values_by_arm: np.ndarray, draws: int = 10,
                      seed: int = 20240817) -> float:
    """Bootstrap check of a strict ordering across arms.

    ``values_by_arm`` is (n_arms, n_seeds), paired by seed. Each draw
    resamples seeds with replacement, averages per arm, and scores 1 when
    the arm means are strictly increasing. Returns the fraction of draws
    that preserve the ordering.
    """
    vals = np.asarray(values_by_arm, dtype=np.float64)
    if vals.ndim != 2:
        raise ValueError("expected (n_arms, n_seeds)")
    gen = np.random.default_rng(seed)
    n_seeds = vals.shape[1]
    hits = 0
    for _ in range(draws):
        idx = gen.integers(0, n_seeds, size=n_seeds)
        means = vals[:, idx].mean(axis=1)
        if np.all(np.diff(means) > 0.0):
            hits += 1
    return hits / draws


def write_episodes_csv(path, episodes: list[EpisodeMetrics]) -> None:
    """One row per episode; floats via repr for lossless round-trips.
    delta_q is blank when the run recorded no reference."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["episode", "steps", "reward", "delta_q", "alarms",
                     "winner", "asks", "responses"])
        for e in episodes:
            dq = "" if np.isnan(e.delta_q) else repr(e.delta_q)
            wr.writerow([e.episode, e.steps, repr(e.reward), dq, e.alarms,
                         e.winner, e.asks, e.responses])


def read_episodes_csv(path) -> list[EpisodeMetrics]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            out.append(EpisodeMetrics(
                episode=int(row["episode"]), steps=int(row["steps"]),
                reward=float(row["reward"]),
                delta_q=float(row["delta_q"]) if row["delta_q"] else float("nan"),
                alarms=int(row["alarms"]), winner=int(row["winner"]),
                asks=int(row["asks"]), responses=int(row["responses"])))
    return out


def write_gamma_csv(path, gamma_by_episode: np.ndarray) -> None:
    """Sparse (episode, degree, count) rows; degree 0 marks channel-attack
    injections, which have no escalation loop."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["episode", "degree", "count"])
        eps, degs = np.nonzero(gamma_by_episode)
        for e, d in zip(eps, degs):
            wr.writerow([int(e), int(d), int(gamma_by_episode[e, d])])


def read_gamma_csv(path, n_episodes: int, n_degrees: int) -> np.ndarray:
    out = np.zeros((n_episodes, n_degrees), dtype=np.int64)
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            out[int(row["episode"]), int(row["degree"])] = int(row["count"])
    return out
