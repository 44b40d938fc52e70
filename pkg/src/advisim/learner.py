"""Tabular Q-learning over encoded grid states."""

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import Stream


@dataclass
class LearnerParams:
    alpha: float = 0.10
    gamma: float = 0.80
    epsilon: float = 0.08

    def validate(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


class QTable:
    """Dense (n_states, n_actions) action-value table, zero-initialised."""

    def __init__(self, n_states: int, n_actions: int = 5):
        if n_states <= 0 or n_actions <= 0:
            raise ValueError("table dimensions must be positive")
        self.values = np.zeros((n_states, n_actions), dtype=np.float64)

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "QTable":
        out = QTable(self.n_states, self.n_actions)
        out.values[:] = self.values
        return out

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["state", "action", "q"])
            for s in range(self.n_states):
                for a in range(self.n_actions):
                    wr.writerow([s, a, repr(float(self.values[s, a]))])

    @classmethod
    def load_csv(cls, path) -> "QTable":
        rows = []
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            next(rd)
            for s, a, v in rd:
                rows.append((int(s), int(a), float(v)))
        n_states = max(r[0] for r in rows) + 1
        n_actions = max(r[1] for r in rows) + 1
        table = cls(n_states, n_actions)
        for s, a, v in rows:
            table.values[s, a] = v
        return table


def select_action(q: QTable, state: int, params: LearnerParams, rng: Stream) -> int:
    """Epsilon-greedy: explore uniformly with probability epsilon, else the
    greedy action with lowest index winning ties. epsilon = 0 consumes no
    randomness and is fully deterministic given the table."""
    params.validate()
    if not 0 <= state < q.n_states:
        raise IndexError(f"state {state} outside table")
    return int(kernels.choose_action(rng.states, rng.index,
                                     q.values[state], params.epsilon))


def q_update(q: QTable, state: int, action: int, reward: float,
             next_state: int, params: LearnerParams,
             terminal: bool = False) -> float:
    """Standard update: Q <- (1-alpha) Q + alpha (r + gamma max_a' Q(s', a')).

    A terminal next state bootstraps zero. Returns the new value.
    """
    params.validate()
    if not np.isfinite(reward):
        raise ValueError(f"non-finite reward {reward}")
    if not 0 <= state < q.n_states or not 0 <= next_state < q.n_states:
        raise IndexError("state outside table")
    if not 0 <= action < q.n_actions:
        raise IndexError(f"action {action} outside table")
    best_next = 0.0
    if not terminal:
        row = q.values[next_state]
        best_next = row[kernels.argmax_low(row)]
    new = kernels.q_update_value(q.values[state, action], reward, best_next,
                                 params.alpha, params.gamma)
    q.values[state, action] = new
    return float(new)
