"""Budgeted ask/give advice exchange.

An agent about to act in state s asks for advice with probability
1/sqrt(1 + its visit count of s), provided its ask budget remains. Every
peer inside the advice zone (Chebyshev ball around the asker) answers
independently with probability 1/sqrt(1 + the peer's visit count of s)
while its give budget lasts. Benign answers are the peer's privacy-noised
Q row; answers from in-protocol attackers are crafted (module attack).

Received rows are folded into the advisee's own row as

    Q(s, .) <- w * Q(s, .) + (1 - w) * mean(received rows)

so w = 1 ignores advice entirely and the system collapses to independent
learners.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import GridWorld
from .privacy import PrivacyParams
from .rng import Stream


@dataclass
class AdviceParams:
    weight: float = 0.90
    zone_radius: int = 2
    ask_budget: int = 100_000
    give_budget: int = 100_000
    ask_exponent: float = 0.5  # (1+n)^-e decay; 0 answers every ask
    give_exponent: float = 0.5

    def validate(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must be in [0, 1], got {self.weight}")
        if self.zone_radius < 0:
            raise ValueError(f"zone radius must be >= 0, got {self.zone_radius}")
        if self.ask_budget < 0 or self.give_budget < 0:
            raise ValueError("budgets must be >= 0")
        if self.ask_exponent < 0.0 or self.give_exponent < 0.0:
            raise ValueError("decay exponents must be >= 0")


@dataclass
class AdviceBudget:
    """Remaining ask/give counts per agent."""

    remaining_ask: np.ndarray
    remaining_give: np.ndarray

    @classmethod
    def fresh(cls, n_agents: int, params: AdviceParams) -> "AdviceBudget":
        params.validate()
        return cls(np.full(n_agents, params.ask_budget, dtype=np.int64),
                   np.full(n_agents, params.give_budget, dtype=np.int64))


@dataclass
class AdviceRecord:
    advisor: int
    state: int
    values: np.ndarray
    malicious: bool = False
    episode: int = -1
    step: int = -1


def request_probability(visit_count: int, exponent: float = 0.5) -> float:
    """(1 + n)^-exponent: certain for an unseen state, decaying with
    familiarity. The default exponent gives 1/sqrt(1 + n)."""
    if visit_count < 0:
        raise ValueError(f"visit count must be >= 0, got {visit_count}")
    if exponent < 0.0:
        raise ValueError(f"exponent must be >= 0, got {exponent}")
    return float((1.0 + visit_count) ** -exponent)


def in_zone(world: GridWorld, asker: int, peer: int, radius: int) -> bool:
    dx = abs(int(world.positions[asker, 0]) - int(world.positions[peer, 0]))
    dy = abs(int(world.positions[asker, 1]) - int(world.positions[peer, 1]))
    return max(dx, dy) <= radius


def aggregate(own_row: np.ndarray, records: list[AdviceRecord],
              weight: float) -> np.ndarray:
    """Weighted blend of own row and the mean of received rows; with no
    records (or w = 1) the own row comes back unchanged."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must be in [0, 1], got {weight}")
    own_row = np.asarray(own_row, dtype=np.float64)
    if not records:
        return own_row.copy()
    stacked = np.stack([np.asarray(r.values, dtype=np.float64) for r in records])
    if stacked.shape[1] != own_row.shape[0]:
        raise ValueError("advice vector shape does not match the Q row")
    return weight * own_row + (1.0 - weight) * stacked.mean(axis=0)


def gather_advice(advisee: int, state: int, world: GridWorld, q: np.ndarray,
                  visit: np.ndarray, params: AdviceParams,
                  privacy: PrivacyParams | None, budget: AdviceBudget,
                  rng: Stream, attacker_flags: np.ndarray | None = None,
                  attack_cfg: dict | None = None,
                  visit_life: np.ndarray | None = None) -> list[AdviceRecord]:
    """Run one ask round and return the responses.

    ``q`` is the stacked (n_agents, n_states, n_actions) table, ``visit``
    the (n_agents, n_states) within-episode visit counts driving the ask
    probability; ``visit_life`` the lifetime counts driving each responder's
    give probability (defaults to ``visit``); all untouched. Budgets are
    decremented in place: the advisee's once if the ask fires, each
    responder's once per response. ``privacy=None`` publishes raw rows.

    ``attack_cfg`` (used when ``attacker_flags`` marks someone) carries the
    keys ``mode`` ("internal"/"external"), ``sampler``, ``degree_cap``,
    ``theta``, ``external_degree``; see the harness for how campaign arms
    fill it. Uses the same compiled exchange as the episode runner.
    """
    params.validate()
    n_agents, n_states, n_actions = q.shape
    if not 0 <= advisee < n_agents:
        raise IndexError(f"advisee {advisee} out of range")
    if not 0 <= state < n_states:
        raise IndexError(f"state {state} out of range")

    from .harness import pack_config  # local import: harness imports us

    cfg = dict(attack_cfg or {})
    ci, cf, c_tab, mu_tab = pack_config(
        height=world.height, width=world.width, goal=world.goal,
        step_limit=world.step_limit, n_agents=n_agents, advice=True,
        dp=privacy is not None, privacy=privacy or PrivacyParams(),
        advice_params=params,
        attack_mode=cfg.get("mode", "none") if attacker_flags is not None else "none",
        sampler=cfg.get("sampler", "shifted-laplace"),
        degree_cap=cfg.get("degree_cap", 12), theta=cfg.get("theta", 0.0),
        external_degree=cfg.get("external_degree", 4.0))
    if attacker_flags is None:
        attacker_flags = np.zeros(n_agents, dtype=np.uint8)
    attacker_flags = np.asarray(attacker_flags, dtype=np.uint8)

    out_vec = np.empty((n_agents, n_actions))
    out_adv = np.empty(n_agents, dtype=np.int64)
    out_mal = np.empty(n_agents, dtype=np.int64)
    out_deg = np.empty(n_agents, dtype=np.int64)
    out_by = np.empty(n_agents, dtype=np.int64)
    if visit_life is None:
        visit_life = visit
    asked, n = kernels.exchange_advice(
        ci, cf, advisee, state, world.positions, q, visit, visit_life,
        budget.remaining_ask, budget.remaining_give, attacker_flags,
        c_tab, mu_tab, rng.states, out_vec, out_adv, out_mal, out_deg, out_by)
    return [AdviceRecord(advisor=int(out_adv[r]), state=state,
                         values=out_vec[r].copy(), malicious=bool(out_mal[r]))
            for r in range(n)]
