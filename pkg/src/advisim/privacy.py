"""Local differential privacy for published Q rows.

Advisors never share raw values: each entry of the advertised row is
perturbed with Laplace noise and re-drawn until it lands inside the public
value range [lower, upper], i.e. the bounded mechanism whose stationary law
is the interval-truncated, renormalised Laplace density. The noise scale is

    b = alpha * |upper - lower| / epsilon

so tighter privacy (smaller epsilon) means wider noise.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import Stream


@dataclass
class PrivacyParams:
    epsilon: float = 1.0
    lower: float = -1.5
    upper: float = 10.0
    alpha: float = 0.10  # scale coefficient; defaults to the learning rate

    def validate(self) -> None:
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.lower < self.upper:
            raise ValueError(f"empty value range [{self.lower}, {self.upper}]")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def sensitivity(self) -> float:
        return abs(self.upper - self.lower)

    @property
    def scale(self) -> float:
        """Laplace scale b = alpha * |upper - lower| / epsilon."""
        self.validate()
        return self.alpha * self.sensitivity / self.epsilon


def laplace_sample(mean: float, scale: float, rng: Stream) -> float:
    """One unbounded Laplace(mean, scale) draw via the inverse CDF."""
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    return float(kernels.draw_laplace(rng.states, rng.index, mean, scale))


def bounded_perturb(value: float, params: PrivacyParams, rng: Stream) -> float:
    """Perturb one in-range value; resampled until the result is in range."""
    params.validate()
    if not params.lower <= value <= params.upper:
        raise ValueError(
            f"value {value} outside [{params.lower}, {params.upper}]")
    return float(kernels.draw_bounded_laplace(
        rng.states, rng.index, value, params.scale, params.lower, params.upper))


def perturb_qvector(qrow: np.ndarray, params: PrivacyParams, rng: Stream) -> np.ndarray:
    """Clamp a Q row into the value range, then bounded-perturb each entry
    independently. This is what a benign advisor publishes."""
    params.validate()
    qrow = np.asarray(qrow, dtype=np.float64)
    out = np.empty_like(qrow)
    lo, up, b = params.lower, params.upper, params.scale
    for a in range(qrow.shape[0]):
        v = min(max(float(qrow[a]), lo), up)
        out[a] = kernels.draw_bounded_laplace(rng.states, rng.index, v, b, lo, up)
    return out
