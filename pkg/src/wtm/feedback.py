"""Type I and Type II feedback for a single clause.

Type I (per automaton, given clause value v and literal value l):

    =========  ===========  ===========  ===========  ========
    v, l       0, 0         0, 1         1, 0         1, 1
    =========  ===========  ===========  ===========  ========
    include    p_s-penalty  p_s-penalty  unreachable  reward
    exclude    p_s-reward   p_s-reward   p_s-reward   penalty
    =========  ===========  ===========  ===========  ========

Type II only acts when v = 1: excluded automata whose literal is 0 are
penalized, everything else is left alone.

The p_s-events of one Type I event share a single mask over the clause's
``2*o`` automata.  The clause value is computed once, before any state
changes.
"""
from __future__ import annotations

from enum import Enum

import numpy as np
from numba import njit

from .automata import Clause, _clause_output, _rewarded, literals
from .sampling import Rng, _sample_positions, binomial_cdf, is_bernoulli


class FeedbackKind(Enum):
    TYPE_I = 1
    TYPE_II = 2


@njit(cache=True, inline="always")
def _set_bit(row, k):
    row[k >> 6] |= np.uint64(1) << np.uint64(k & 63)


@njit(cache=True, inline="always")
def _clear_bit(row, k):
    row[k >> 6] &= ~(np.uint64(1) << np.uint64(k & 63))


@njit(cache=True, inline="always")
def _type_i(states, lits, n_states, output, positions, q, include):
    # ``include`` holds the packed actions and is kept in step with the
    # states; only a penalty can flip an action.
    if output:
        # The deterministic cells touch literals of value 1 only and the
        # masked cells that can fire when v = 1 touch literals of value 0
        # only, so the two passes never update the same automaton.
        for k in range(states.shape[0]):
            if lits[k]:
                s = states[k]
                if s > n_states:
                    states[k] = _rewarded(s, n_states)
                else:
                    states[k] = s + 1
                    if s == n_states:
                        _set_bit(include, k)
        for i in range(q):
            k = positions[i]
            if lits[k] == 0:
                states[k] = _rewarded(states[k], n_states)
    else:
        for i in range(q):
            k = positions[i]
            s = states[k]
            if s > n_states:
                states[k] = s - 1
                if s == n_states + 1:
                    _clear_bit(include, k)
            else:
                states[k] = _rewarded(s, n_states)


@njit(cache=True, inline="always")
def _type_ii(states, lits, n_states, include):
    for k in range(states.shape[0]):
        if lits[k] == 0 and states[k] <= n_states:
            states[k] += 1
            if states[k] == n_states + 1:
                _set_bit(include, k)


def _include_row(c: Clause) -> np.ndarray:
    bits = np.zeros(-(-c.states.shape[0] // 64) * 64, dtype=np.uint8)
    bits[: c.states.shape[0]] = c.states > c.n_states
    return np.packbits(bits, bitorder="little").view("<u8")


def _checked_literals(c: Clause, x) -> np.ndarray:
    lits = literals(x)
    if lits.shape[0] != c.states.shape[0]:
        raise ValueError(f"input has {lits.shape[0] // 2} features, clause expects {c.n_features}")
    return lits


def apply_type_i(c: Clause, x, p_s: float, rng: Rng | None = None, *, mask=None, sampler: str = "binomial") -> Clause:
    """Apply one Type I event to ``c`` in place and return it.

    The p_s-events are drawn from ``rng`` with the chosen sampler unless an
    explicit boolean ``mask`` of length ``2*o`` is given, in which case no
    random numbers are used.
    """
    if not 0.0 < p_s < 1.0:
        raise ValueError(f"p_s must lie in (0, 1), got {p_s}")
    lits = _checked_literals(c, x)
    u = lits.shape[0]
    output = _clause_output(c.states, lits, c.n_states, True)
    if mask is None:
        if rng is None:
            raise ValueError("either rng or mask is required")
        positions = np.empty(u, dtype=np.int64)
        flags = np.zeros(u, dtype=np.uint8)
        q = _sample_positions(rng.state, u, p_s, is_bernoulli(sampler), binomial_cdf(u, p_s), flags, positions)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (u,):
            raise ValueError(f"mask must have length {u}")
        positions = np.flatnonzero(mask).astype(np.int64)
        q = positions.shape[0]
    if output:
        # an included literal of value 0 would have made the clause output 0
        assert not np.any((c.states > c.n_states) & (lits == 0)), "Type I reached the NA cell"
    _type_i(c.states, lits, c.n_states, output, positions, q, _include_row(c))
    return c


def apply_type_ii(c: Clause, x) -> Clause:
    """Apply one Type II event to ``c`` in place and return it."""
    lits = _checked_literals(c, x)
    if _clause_output(c.states, lits, c.n_states, True):
        _type_ii(c.states, lits, c.n_states, _include_row(c))
    return c
