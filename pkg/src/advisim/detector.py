"""Threshold anomaly detection on incoming advice.

Each advisee keeps a per-state running mean of the advice vectors it has
accepted so far (zero before any). An incoming vector raises an alarm when
any action's absolute deviation from that reference exceeds the threshold:
tau raw, or tau * kappa when privacy noise is on (the wider gate keeps the
benign false-positive rate down, and is exactly what a stealthy attacker
exploits). Alarms are logged, not blocking, unless configured otherwise;
accepted vectors update the reference.

The gap between the two gates, |tau * kappa - tau| = tau * |kappa - 1|, is
the margin an attacker can sit inside on a privacy-enabled channel without
ever alarming.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class DetectorParams:
    tau: float = 100.0
    kappa: float = 1000.0
    blocking: bool = False

    def validate(self) -> None:
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @property
    def tau_prime(self) -> float:
        """Threshold applied when the advice channel carries privacy noise."""
        self.validate()
        return self.tau * self.kappa

    def threshold(self, dp_enabled: bool) -> float:
        return self.tau_prime if dp_enabled else self.tau

    def poisoning_window(self) -> float:
        """Width of the deviation band that alarms under one gate but not
        the other: tau * |kappa - 1|."""
        self.validate()
        return abs(self.tau_prime - self.tau)


class ReferenceTracker:
    """Running mean of accepted advice per (state, action), starting at 0."""

    def __init__(self, n_states: int, n_actions: int = 5):
        self.mean = np.zeros((n_states, n_actions), dtype=np.float64)
        self.count = np.zeros((n_states, n_actions), dtype=np.int64)

    def accept(self, state: int, values: np.ndarray) -> None:
        kernels.tracker_update(np.asarray(values, dtype=np.float64),
                               self.mean[state], self.count[state])


def deviation(values: np.ndarray, tracker: ReferenceTracker, state: int) -> float:
    """Largest per-action absolute deviation from the reference."""
    return float(kernels.max_abs_deviation(
        np.asarray(values, dtype=np.float64), tracker.mean[state]))


def check(values: np.ndarray, state: int, tracker: ReferenceTracker,
          params: DetectorParams, dp_enabled: bool) -> bool:
    """Screen one advice vector; returns True when it alarms.

    Accepted vectors are folded into the tracker; alarmed vectors are not.
    Alarming is monotone in the threshold: anything that alarms at T alarms
    at every threshold below T.
    """
    params.validate()
    dev = deviation(values, tracker, state)
    alarmed = dev > params.threshold(dp_enabled)
    if not alarmed:
        tracker.accept(state, values)
    return alarmed


# ---------------------------------------------------------------------------
# synthetic threshold-calibration study
# ---------------------------------------------------------------------------


@dataclass
class CalibrationResult:
    """Mean outlier counts (per batch of n) over the Monte Carlo reps.

    ``evasion_gap`` is outliers_attack - outliers_dp: how much the attack
    sticks out beyond benign privacy noise under the scaled gate. A stealthy
    attack keeps it near zero while ``rmse`` (distortion of the attacked
    values) keeps growing with the degree.
    """

    n: int
    tau: float
    kappa: float
    degree: float
    reps: int
    outliers_raw: float
    outliers_dp: float
    outliers_attack: float
    evasion_gap: float
    rmse: float


def _study_draws(n: int, reps: int, privacy, profile, rng) -> tuple:
    """Pre-draw all randomness so every threshold sees the same samples."""
    from .privacy import laplace_sample
    from .attack import sample_adversarial

    lo, up, b = privacy.lower, privacy.upper, privacy.scale
    values = np.empty((reps, n))
    benign = np.empty((reps, n))
    attacked = np.empty((reps, n))
    for i in range(reps):
        for j in range(n):
            values[i, j] = lo + (up - lo) * rng.next_float()
    for i in range(reps):
        for j in range(n):
            benign[i, j] = laplace_sample(0.0, b, rng)
    for i in range(reps):
        for j in range(n):
            attacked[i, j] = sample_adversarial(profile, rng)
    return values, values + benign, values + attacked


def _outlier_counts(batch: np.ndarray, threshold: float) -> float:
    """Mean per-batch count of entries deviating from their batch mean by
    more than the threshold. The batch mean is the reference a batch-level
    screen would use; it keeps the rule shift-invariant."""
    dev = np.abs(batch - batch.mean(axis=1, keepdims=True))
    return float((dev > threshold).sum(axis=1).mean())


def calibration_experiment(n: int, tau: float, kappa: float, degree: float,
                           privacy, rng, reps: int = 1000,
                           sampler: str = "shifted-laplace") -> CalibrationResult:
    """Outlier counts for one (tau, kappa, degree) point.

    Three arms share one batch of ground-truth values drawn uniformly from
    the public range: raw (screened at tau), privacy-noised (screened at
    tau * kappa), and privacy-noised-plus-attack (same gate). The study
    isolates the reporting channel, so the noise is unbounded here; bounding
    belongs to the full protocol.
    """
    from .attack import make_profile

    if n <= 0 or reps <= 0:
        raise ValueError("n and reps must be positive")
    params = DetectorParams(tau=tau, kappa=kappa)
    params.validate()
    privacy.validate()
    profile = make_profile(degree, privacy, sampler=sampler)
    values, noised, attacked = _study_draws(n, reps, privacy, profile, rng)
    return CalibrationResult(
        n=n, tau=tau, kappa=kappa, degree=degree, reps=reps,
        outliers_raw=_outlier_counts(values, params.threshold(False)),
        outliers_dp=_outlier_counts(noised, params.threshold(True)),
        outliers_attack=_outlier_counts(attacked, params.threshold(True)),
        evasion_gap=(_outlier_counts(attacked, params.threshold(True))
                     - _outlier_counts(noised, params.threshold(True))),
        rmse=float(np.sqrt(np.mean((attacked - values) ** 2))))


def calibrate_kappa(n: int, tau: float, privacy, rng, reps: int = 1000) -> float:
    """The kappa at which the privacy-noised arm flags as many outliers as
    the raw arm does at tau.

    Draws once and bisects on kappa (the count is non-increasing in the
    threshold, hence in kappa), so the result is deterministic given the
    stream state.
    """
    from .privacy import laplace_sample

    if n <= 0 or reps <= 0:
        raise ValueError("n and reps must be positive")
    privacy.validate()
    lo, up, b = privacy.lower, privacy.upper, privacy.scale
    values = np.empty((reps, n))
    noised = np.empty((reps, n))
    for i in range(reps):
        for j in range(n):
            values[i, j] = lo + (up - lo) * rng.next_float()
    for i in range(reps):
        for j in range(n):
            noised[i, j] = values[i, j] + laplace_sample(0.0, b, rng)
    target = _outlier_counts(values, tau)
    if target <= 0.0:
        raise ValueError(
            f"raw arm flags nothing at tau={tau}; pick a tau inside the "
            "spread of the value range for a meaningful calibration")
    k_lo, k_hi = 1.0, 2.0
    while _outlier_counts(noised, tau * k_hi) > target and k_hi < 1e6:
        k_hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (k_lo + k_hi)
        if _outlier_counts(noised, tau * mid) > target:
            k_lo = mid
        else:
            k_hi = mid
    return 0.5 * (k_lo + k_hi)
