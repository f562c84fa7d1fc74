"""Variable-structure learning automaton over a set of candidate features.

Each currently active feature is one action. The automaton keeps a
probability vector over actions, samples actions from it, and reinforces an
action by shifting probability mass toward it in fixed steps. Penalties
leave the vector untouched (reward-inaction scheme). Once an action's
probability crosses the removal threshold it is dropped and the vector is
reset to uniform over the survivors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class AutomatonState:
    """Active actions (original 1-based feature ids) and their probabilities."""

    actions: tuple[int, ...]
    probabilities: np.ndarray  # float64, aligned with actions
    step_size: float  # per-update decrement applied to non-chosen actions
    threshold: float  # probability level that flags an action for removal

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)
        if len(self.actions) != p.shape[0]:
            raise ConfigError("action list and probability vector differ in length")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.step_size <= 0.0:
            raise ConfigError(f"step size must be positive, got {self.step_size}")

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def check_simplex(self) -> None:
        p = self.probabilities
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise AssertionError(f"probability out of [0, 1]: {p}")
        if abs(float(p.sum()) - 1.0) > SIMPLEX_TOL:
            raise AssertionError(f"probabilities sum to {p.sum()!r}")


def init(active_indices, step_size: float, threshold: float) -> AutomatonState:
    """Uniform probability vector over the given actions."""
    actions = tuple(int(i) for i in active_indices)
    if not actions:
        raise ConfigError("cannot initialize an automaton with no actions")
    if len(set(actions)) != len(actions):
        raise ConfigError("duplicate action indices")
    actions = tuple(sorted(actions))
    n = len(actions)
    if n > 1 and step_size >= 1.0 / n:
        warnings.warn(
            f"step size {step_size} >= 1/{n}; updates will clamp aggressively",
            stacklevel=2,
        )
    return AutomatonState(
        actions=actions,
        probabilities=np.full(n, 1.0 / n),
        step_size=step_size,
        threshold=threshold,
    )


def select_action(state: AutomatonState, rng: np.random.Generator) -> int:
    """Sample one action; returns its original feature index.

    Inverse-CDF sampling; zero-probability actions can never be returned.
    """
    cum = np.cumsum(state.probabilities)
    u = rng.random() * cum[-1]
    pos = int(np.searchsorted(cum, u, side="right"))
    pos = min(pos, state.n_actions - 1)
    return state.actions[pos]


def reward(state: AutomatonState, chosen: int) -> AutomatonState:
    """Shift probability mass toward the chosen action.

    Every other entry is decremented by the step size and clamped at zero;
    the chosen entry is then recomputed as one minus the rest, so the vector
    sums to one by construction no matter how much mass the clamping ate.
    """
    try:
        pos = state.actions.index(chosen)
    except ValueError:
        raise ConfigError(f"action {chosen} is not active") from None
    p = np.maximum(state.probabilities - state.step_size, 0.0)
    p[pos] = 0.0
    # max() only guards against sub-ulp drift; the analytic value is >= 0
    p[pos] = min(max(1.0 - float(p.sum()), 0.0), 1.0)
    return AutomatonState(state.actions, p, state.step_size, state.threshold)


def penalty(state: AutomatonState) -> AutomatonState:
    """No-op: probabilities change only on reward."""
    return state


def check_threshold(state: AutomatonState):
    """Return the action to remove, or None while no probability has crossed.

    The comparison is inclusive; ties resolve to the lowest feature index
    (actions are kept sorted, so the first argmax is the lowest).
    """
    pos = int(np.argmax(state.probabilities))
    if state.probabilities[pos] >= state.threshold:
        return state.actions[pos]
    return None


def reinitialize(state: AutomatonState, removed: int) -> AutomatonState:
    """Drop an action and reset to uniform over the survivors."""
    if removed not in state.actions:
        raise ConfigError(f"action {removed} is not active")
    survivors = tuple(a for a in state.actions if a != removed)
    if not survivors:
        raise ConfigError("cannot remove the last remaining action")
    n = len(survivors)
    return AutomatonState(
        actions=survivors,
        probabilities=np.full(n, 1.0 / n),
        step_size=state.step_size,
        threshold=state.threshold,
    )
