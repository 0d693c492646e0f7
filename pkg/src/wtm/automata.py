"""Two-action Tsetlin automata and the conjunctive clauses they form.

A clause over ``o`` features owns ``2*o`` automata.  Automaton ``k < o``
guards the literal ``x[k]``; automaton ``k >= o`` guards ``not x[k - o]``.
States run from 1 to ``2*N``: ``1..N`` choose EXCLUDE, ``N+1..2N`` choose
INCLUDE.  A penalty moves a state one step toward the centre (and may flip
the action); a reward moves it one step toward the nearer extreme, where it
saturates.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numba import njit

from .sampling import Rng, _uniform_below

DEFAULT_STATES = 100


class Action(IntEnum):
    EXCLUDE = 0
    INCLUDE = 1


class Mode(IntEnum):
    """Evaluation mode; it only matters for clauses with no included literal."""

    LEARN = 0
    CLASSIFY = 1


@dataclass(frozen=True)
class AutomatonState:
    state: int
    n_states: int = DEFAULT_STATES

    def __post_init__(self):
        if self.n_states < 1:
            raise ValueError(f"states per action must be >= 1, got {self.n_states}")
        if not 1 <= self.state <= 2 * self.n_states:
            raise ValueError(f"state {self.state} outside [1, {2 * self.n_states}]")


def action(a: AutomatonState) -> Action:
    return Action.INCLUDE if a.state > a.n_states else Action.EXCLUDE


def apply_penalty(a: AutomatonState) -> AutomatonState:
    return AutomatonState(int(_penalized(a.state, a.n_states)), a.n_states)


def apply_reward(a: AutomatonState) -> AutomatonState:
    return AutomatonState(int(_rewarded(a.state, a.n_states)), a.n_states)


@njit(cache=True, inline="always")
def _penalized(s, n):
    return s + 1 if s <= n else s - 1


@njit(cache=True, inline="always")
def _rewarded(s, n):
    if s <= n:
        return s - 1 if s > 1 else s
    return s + 1 if s < 2 * n else s


# ---------------------------------------------------------------------------
# literals and clause evaluation


def literals(x) -> np.ndarray:
    """Literal values ``(x_1..x_o, not x_1..not x_o)`` as uint8."""
    x = np.asarray(x, dtype=np.uint8)
    if x.ndim != 1:
        raise ValueError("expected a 1-d feature vector")
    if np.any(x > 1):
        raise ValueError("features must be 0/1")
    return np.concatenate((x, 1 - x))


def literal_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.uint8)
    return np.ascontiguousarray(np.concatenate((X, 1 - X), axis=1))


@njit(cache=True, inline="always")
def _clause_output(states, lits, n_states, learn):
    included = False
    for k in range(states.shape[0]):
        if states[k] > n_states:
            if lits[k] == 0:
                return 0
            included = True
    if included or learn:
        return 1
    return 0


@njit(cache=True)
def _bank_outputs(states, lits, n_states, learn, out):
    for j in range(states.shape[0]):
        out[j] = _clause_output(states[j], lits, n_states, learn)


def random_states(rng: Rng, shape, n_states: int) -> np.ndarray:
    """Automaton states drawn uniformly from {N, N+1}."""
    out = np.empty(int(np.prod(shape)), dtype=np.int32)
    _fill_centre(rng.state, out, n_states)
    return out.reshape(shape)


@njit(cache=True)
def _fill_centre(state, out, n_states):
    for i in range(out.shape[0]):
        out[i] = n_states + _uniform_below(state, 2)


# ---------------------------------------------------------------------------
# clauses


@dataclass(eq=False)
class Clause:
    """A team of ``2*o`` automata plus a positive vote weight."""

    states: np.ndarray
    n_states: int = DEFAULT_STATES
    weight: float = 1.0

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.int32)
        if self.states.ndim != 1 or self.states.shape[0] % 2 or self.states.shape[0] == 0:
            raise ValueError("a clause needs an even, positive number of automata")
        if self.states.min() < 1 or self.states.max() > 2 * self.n_states:
            raise ValueError(f"automaton states must lie in [1, {2 * self.n_states}]")
        if not self.weight > 0:
            raise ValueError(f"clause weight must be positive, got {self.weight}")

    @property
    def n_features(self) -> int:
        return self.states.shape[0] // 2

    @classmethod
    def random(cls, n_features: int, rng: Rng, n_states: int = DEFAULT_STATES) -> "Clause":
        return cls(random_states(rng, (2 * n_features,), n_states), n_states)

    @classmethod
    def from_literals(cls, n_features: int, included, n_states: int = DEFAULT_STATES, weight: float = 1.0) -> "Clause":
        """Clause with the given literal indices at N+1 and the rest at N."""
        states = np.full(2 * n_features, n_states, dtype=np.int32)
        states[list(included)] = n_states + 1
        return cls(states, n_states, weight)

    def copy(self) -> "Clause":
        return Clause(self.states.copy(), self.n_states, self.weight)

    def actions(self) -> np.ndarray:
        return (self.states > self.n_states).astype(np.uint8)

    def __eq__(self, other):
        if not isinstance(other, Clause):
            return NotImplemented
        return (
            self.n_states == other.n_states
            and self.weight == other.weight
            and np.array_equal(self.states, other.states)
        )


def clause_output(c: Clause, x, mode: Mode = Mode.CLASSIFY) -> int:
    """Conjunction of the included literals on ``x``.

    A clause that includes nothing outputs 1 while learning, so Type I
    feedback can still grow it, and 0 when classifying, so it casts no vote.
    """
    lits = literals(x)
    if lits.shape[0] != c.states.shape[0]:
        raise ValueError(f"input has {lits.shape[0] // 2} features, clause expects {c.n_features}")
    return int(_clause_output(c.states, lits, c.n_states, mode == Mode.LEARN))


def included_literals(c: Clause) -> list[int]:
    return [int(k) for k in np.flatnonzero(c.states > c.n_states)]


def literal_name(index: int, n_features: int) -> str:
    if index < n_features:
        return f"x{index + 1}"
    return f"¬x{index - n_features + 1}"


def render_clause(c: Clause) -> str:
    """Human-readable conjunction, e.g. ``x1 ∧ x3 ∧ ¬x2``; ``⊤`` if empty."""
    names = [literal_name(k, c.n_features) for k in included_literals(c)]
    return " ∧ ".join(names) if names else "⊤"
