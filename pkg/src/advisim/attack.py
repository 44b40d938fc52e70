"""Stealth poisoning of the advice channel.

A malicious advisor wants the advisee to act against its own best estimate
without tripping the anomaly detector. It draws its advice from a tilted
two-sided exponential

    f(x) = K * exp(-|x - theta| / b + (x - theta) / c),   c > b,
    K = (c^2 - b^2) / (2 b c^2)

which is the least-distinguishable unit-cost tilt of the Laplace(theta, b)
privacy noise: the poisoning degree gamma fixes the divergence budget and
determines c through

    2 b^2 / (c^2 - b^2) + ln(1 - b^2 / c^2) = gamma.

Smaller c tilts harder; the mean of the tilted law is

    mu = (b^2 (theta - 2c) - theta c^2) / (b^2 - c^2) = theta + 2 b^2 c / (c^2 - b^2).

Two sampler shapes are supported: ``shifted-laplace`` keeps the Laplace
shape and moves its location to mu (same first moment, same spread as the
benign noise), ``tilted`` draws from f itself. The in-protocol attacker
escalates gamma per advice event until its crafted value for the advisee's
best action undercuts the advisee's own estimate (see
:func:`poisoned_qvector`).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .privacy import PrivacyParams
from .rng import Stream

SAMPLER_SHIFTED = "shifted-laplace"
SAMPLER_TILTED = "tilted"


def solve_multiplier(degree: float, scale: float) -> float:
    """The unique c > scale matching the poisoning degree.

    The substitution t = (scale/c)^2 turns the condition into a strictly
    increasing scalar equation on (0, 1) (derivative (1+t)/(1-t)^2 > 0), so
    bisection always converges; see kernels.solve_multiplier.
    """
    if degree <= 0.0:
        raise ValueError(f"degree must be positive, got {degree}")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    return float(kernels.solve_multiplier(float(degree), float(scale)))


def attack_mean(theta: float, scale: float, c: float) -> float:
    """Mean of the tilted law; grows without bound as c approaches scale
    and collapses to theta as c grows (no tilt)."""
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    if c <= scale:
        raise ValueError(f"multiplier c={c} must exceed the scale {scale}")
    return float(kernels.attack_mean_kernel(theta, scale, c))


@dataclass(frozen=True)
class AdversarialProfile:
    """One resolved noise profile: degree plus the derived constants."""

    degree: float
    theta: float
    scale: float
    c: float
    mu: float
    sampler: str = SAMPLER_SHIFTED

    def validate(self) -> None:
        if self.sampler not in (SAMPLER_SHIFTED, SAMPLER_TILTED):
            raise ValueError(f"unknown sampler {self.sampler!r}")


def make_profile(degree: float, privacy: PrivacyParams, theta: float = 0.0,
                 sampler: str = SAMPLER_SHIFTED) -> AdversarialProfile:
    b = privacy.scale
    c = solve_multiplier(degree, b)
    profile = AdversarialProfile(degree=degree, theta=theta, scale=b, c=c,
                                 mu=attack_mean(theta, b, c), sampler=sampler)
    profile.validate()
    return profile


def degree_tables(privacy: PrivacyParams, degree_cap: int,
                  theta: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """(c, mu) lookup tables for integer degrees 1 .. degree_cap + 1; the
    escalation loop indexes them instead of re-solving per advice event."""
    if degree_cap < 1:
        raise ValueError(f"degree cap must be at least 1, got {degree_cap}")
    b = privacy.scale
    c_tab = np.array([kernels.solve_multiplier(float(g), b)
                      for g in range(1, degree_cap + 2)])
    mu_tab = np.array([kernels.attack_mean_kernel(theta, b, c) for c in c_tab])
    return c_tab, mu_tab


def sample_adversarial(profile: AdversarialProfile, rng: Stream) -> float:
    """One unbounded draw of the adversarial noise."""
    profile.validate()
    if profile.sampler == SAMPLER_TILTED:
        return float(kernels.draw_tilted(rng.states, rng.index, profile.theta,
                                         profile.scale, profile.c))
    return float(kernels.draw_laplace(rng.states, rng.index, profile.mu,
                                      profile.scale))


def poisoned_qvector(attacker_row: np.ndarray, advisee_row: np.ndarray,
                     privacy: PrivacyParams, rng: Stream,
                     degree_cap: int = 12, theta: float = 0.0,
                     sampler: str = SAMPLER_SHIFTED) -> tuple[np.ndarray, int, str]:
    """Craft one advice vector against an advisee.

    Escalates the integer degree from 1: at each degree every action value
    is the attacker's own estimate plus adversarial noise conditioned to
    stay inside the open value range (lo, up). A vector is accepted when its
    value at the advisee's argmax action falls below the advisee's estimate
    there, or unconditionally once the degree exceeds the cap.

    When the attacker has no estimate of the advisee's row, pass the
    attacker's own row as ``advisee_row`` (undercut its own argmax).

    Returns (vector, accepted_degree, reason) with reason ``"q-condition"``
    or ``"degree-cap"``; q-condition acceptance implies degree <= cap.
    """
    privacy.validate()
    attacker_row = np.asarray(attacker_row, dtype=np.float64)
    advisee_row = np.asarray(advisee_row, dtype=np.float64)
    if attacker_row.shape != advisee_row.shape:
        raise ValueError("attacker and advisee rows differ in shape")
    c_tab, mu_tab = degree_tables(privacy, degree_cap, theta)
    out = np.empty_like(attacker_row)
    tilted = 1 if sampler == SAMPLER_TILTED else 0
    if sampler not in (SAMPLER_SHIFTED, SAMPLER_TILTED):
        raise ValueError(f"unknown sampler {sampler!r}")
    degree, by = kernels.poison_vector(
        out, rng.states, rng.index, attacker_row, advisee_row, theta,
        privacy.scale, privacy.lower, privacy.upper, c_tab, mu_tab,
        degree_cap, tilted)
    reason = "q-condition" if by == kernels.ACCEPT_QCOND else "degree-cap"
    return out, int(degree), reason


def inject_external(benign_vector: np.ndarray, profile: AdversarialProfile,
                    privacy: PrivacyParams, rng: Stream) -> np.ndarray:
    """Channel attack: add one unbounded adversarial draw to each entry of
    an already-published vector, then clamp into the value range. Models an
    attacker who can distort the report but not re-run the bounded sampler."""
    profile.validate()
    privacy.validate()
    out = np.asarray(benign_vector, dtype=np.float64).copy()
    tilted = 1 if profile.sampler == SAMPLER_TILTED else 0
    kernels.inject_noise(out, rng.states, rng.index, profile.theta,
                         profile.scale, profile.c, profile.mu, tilted,
                         privacy.lower, privacy.upper)
    return out
