"""Seeded random numbers, exact binomial draws and feedback-mask generation.

The generator is xoshiro256** seeded through splitmix64.  Its whole state
lives in a ``uint64[5]`` array (four state words plus a draw counter) so
the numba kernels used during training can advance it in place; every
64-bit output increments the counter.

Two mask generators are provided.  :func:`bernoulli_mask` flips one coin
per automaton.  :func:`binomial_uniform_mask` draws the number of set bits
once from Binomial(u, p) and then places them with uniform draws, resampling
on collision.  For small ``p`` the second one needs about ``u*p + 1`` draws
instead of ``u``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1

_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_R5 = np.uint64(5)
_R7 = np.uint64(7)
_R9 = np.uint64(9)
_R11 = np.uint64(11)
_R17 = np.uint64(17)
_R32 = np.uint64(32)
_R45 = np.uint64(45)
_R64 = np.uint64(64)
_LOW32 = np.uint64(0xFFFFFFFF)
_TWO32 = np.uint64(1 << 32)
_MAX32 = 1 << 32
_INV53 = 1.0 / 9007199254740992.0

# Above this mean the binomial is drawn by BTPE rejection instead of inversion.
INVERSION_LIMIT = 30.0


def _splitmix64(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def _seed_state(seed: int) -> np.ndarray:
    state = np.zeros(5, dtype=np.uint64)
    x = seed
    for i in range(4):
        x, state[i] = _splitmix64(x)
    return state


class Rng:
    """Single-owner random stream (xoshiro256**, period 2**256 - 1).

    Two generators built from the same seed produce the same sequence on
    every platform.  ``draws`` counts the 64-bit outputs consumed so far.
    """

    __slots__ = ("seed", "state")

    def __init__(self, seed: int = 0):
        seed = int(seed)
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self.state = _seed_state(seed)

    def __repr__(self):
        return f"Rng(seed={self.seed}, draws={self.draws})"

    @property
    def draws(self) -> int:
        return int(self.state[4])

    def spawn(self, index: int) -> "Rng":
        """Independent stream for worker ``index``, derived from the seed only."""
        _, mixed = _splitmix64((self.seed ^ ((index + 1) * 0xD1B54A32D192ED03)) & _MASK64)
        return Rng(mixed)

    def copy(self) -> "Rng":
        other = Rng.__new__(Rng)
        other.seed = self.seed
        other.state = self.state.copy()
        return other

    def random(self) -> float:
        return _next_double(self.state)

    def uniform_int(self, lo: int, hi: int) -> int:
        return uniform_int(self, lo, hi)

    def binomial(self, n: int, p: float) -> int:
        return binomial_draw(self, n, p)

    def permutation(self, n: int) -> np.ndarray:
        out = np.arange(n, dtype=np.int64)
        _shuffle(self.state, out)
        return out


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (_R64 - k))


@njit(cache=True, inline="always")
def _next_u64(state):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    result = _rotl(s1 * _R5, _R7) * _R9
    t = s1 << _R17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, _R45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    state[4] += _ONE
    return result


@njit(cache=True, inline="always")
def _next_double(state):
    return float(np.int64(_next_u64(state) >> _R11)) * _INV53


@njit(cache=True, inline="always")
def _uniform_below(state, n):
    # Lemire's multiply-shift on the top 32 bits: exact, and the division
    # only runs on the rare near-rejection path.
    if n <= _MAX32:
        bound = np.uint64(n)
        m = (_next_u64(state) >> _R32) * bound
        low = m & _LOW32
        if low < bound:
            threshold = (_TWO32 - bound) % bound
            while low < threshold:
                m = (_next_u64(state) >> _R32) * bound
                low = m & _LOW32
        return np.int64(m >> _R32)
    r = np.uint64(n)
    threshold = (_ZERO - r) % r
    while True:
        x = _next_u64(state)
        if x >= threshold:
            return np.int64(x % r)


@njit(cache=True)
def _shuffle(state, arr):
    for i in range(arr.shape[0] - 1, 0, -1):
        j = _uniform_below(state, i + 1)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


@njit(cache=True)
def _binomial_inversion(state, n, p):
    q = 1.0 - p
    qn = math.exp(n * math.log(q))
    mean = n * p
    bound = min(float(n), mean + 10.0 * math.sqrt(mean * q + 1.0))
    x = 0
    px = qn
    u = _next_double(state)
    while u > px:
        x += 1
        if x > bound:
            x = 0
            px = qn
            u = _next_double(state)
        else:
            u -= px
            px = ((n - x + 1) * p * px) / (x * q)
    return x


@njit(cache=True)
def _binomial_btpe(state, n, p):
    # Kachitvichyanukul & Schmeiser (1988) triangle/parallelogram/exponential
    # rejection; exact.  Requires p <= 0.5 and n*p > INVERSION_LIMIT.
    r = p
    q = 1.0 - r
    fm = n * r + r
    m = math.floor(fm)
    p1 = math.floor(2.195 * math.sqrt(n * r * q) - 4.6 * q) + 0.5
    xm = m + 0.5
    xl = xm - p1
    xr = xm + p1
    c = 0.134 + 20.5 / (15.3 + m)
    a = (fm - xl) / (fm - xl * r)
    laml = a * (1.0 + a / 2.0)
    a = (xr - fm) / (xr * q)
    lamr = a * (1.0 + a / 2.0)
    p2 = p1 * (1.0 + 2.0 * c)
    p3 = p2 + c / laml
    p4 = p3 + c / lamr
    nrq = n * r * q
    while True:
        u = _next_double(state) * p4
        v = _next_double(state)
        if u <= p1:
            return int(math.floor(xm - p1 * v + u))
        if u <= p2:
            x = xl + (u - p1) / c
            v = v * c + 1.0 - abs(m - x + 0.5) / p1
            if v > 1.0:
                continue
            y = int(math.floor(x))
        elif u <= p3:
            if v == 0.0:
                continue
            y = int(math.floor(xl + math.log(v) / laml))
            if y < 0:
                continue
            v = v * (u - p2) * laml
        else:
            if v == 0.0:
                continue
            y = int(math.floor(xr - math.log(v) / lamr))
            if y > n:
                continue
            v = v * (u - p3) * lamr

        k = abs(y - int(m))
        if k <= 20 or k >= nrq / 2.0 - 1:
            # explicit evaluation of f(y) / f(m) by the recurrence
            s = r / q
            aa = s * (n + 1)
            f = 1.0
            if m < y:
                for i in range(int(m) + 1, y + 1):
                    f *= aa / i - s
            elif m > y:
                for i in range(y + 1, int(m) + 1):
                    f /= aa / i - s
            if v > f:
                continue
            return y

        # squeeze, then Stirling-corrected bound on log f(y) / f(m)
        rho = (k / nrq) * ((k * (k / 3.0 + 0.625) + 0.16666666666666666) / nrq + 0.5)
        t = -k * k / (2.0 * nrq)
        big_a = math.log(v) if v > 0.0 else -math.inf
        if big_a < t - rho:
            return y
        if big_a > t + rho:
            continue
        x1 = y + 1.0
        f1 = m + 1.0
        z = n + 1.0 - m
        w = n - y + 1.0
        x2 = x1 * x1
        f2 = f1 * f1
        z2 = z * z
        w2 = w * w
        bound = (
            xm * math.log(f1 / x1)
            + (n - m + 0.5) * math.log(z / w)
            + (y - m) * math.log(w * r / (x1 * q))
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / f2) / f2) / f2) / f2) / f1 / 166320.0
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / z2) / z2) / z2) / z2) / z / 166320.0
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / x2) / x2) / x2) / x2) / x1 / 166320.0
            + (13680.0 - (462.0 - (132.0 - (99.0 - 140.0 / w2) / w2) / w2) / w2) / w / 166320.0
        )
        if big_a > bound:
            continue
        return y


@njit(cache=True)
def _binomial(state, n, p):
    flip = p > 0.5
    pp = 1.0 - p if flip else p
    if n * pp <= INVERSION_LIMIT:
        k = _binomial_inversion(state, n, pp)
    else:
        k = _binomial_btpe(state, n, pp)
    return n - k if flip else k


def binomial_cdf(n: int, p: float) -> np.ndarray:
    """``P(X <= x)`` for ``x = 0..n``; the last entry is exactly 1.

    Training draws many binomials with the same ``n`` and ``p``; inverting
    this table costs one uniform draw and a binary search per sample.
    """
    p = _check_prob(p)
    x = np.arange(n + 1)
    if p == 0.0:
        pmf = (x == 0).astype(np.float64)
    elif p == 1.0:
        pmf = (x == n).astype(np.float64)
    else:
        logc = np.array([math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in x])
        pmf = np.exp(logc + x * math.log(p) + (n - x) * math.log1p(-p))
    cdf = np.minimum(np.cumsum(pmf), 1.0)
    cdf[-1] = 1.0
    return cdf


@njit(cache=True, inline="always")
def _binomial_from_cdf(state, cdf):
    return np.searchsorted(cdf, _next_double(state))


@njit(cache=True)
def _binomial_uniform_positions(state, u, p, flags, positions):
    """Sparse form of the binomial-uniform mask.

    Writes the selected indices to ``positions[:q]`` and returns ``q``.
    ``flags`` must be all zero on entry and is left all zero on exit.
    """
    return _uniform_positions(state, u, _binomial(state, u, p), flags, positions)


@njit(cache=True, inline="always")
def _binomial_uniform_positions_cdf(state, u, cdf, flags, positions):
    return _uniform_positions(state, u, _binomial_from_cdf(state, cdf), flags, positions)


@njit(cache=True, inline="always")
def _uniform_positions(state, u, q, flags, positions):
    # q distinct indices by rejection: redraw whenever an index repeats
    k = 0
    while k < q:
        v = _uniform_below(state, u)
        if flags[v] == 0:
            flags[v] = 1
            positions[k] = v
            k += 1
    for i in range(q):
        flags[positions[i]] = 0
    return q


@njit(cache=True, inline="always")
def _bernoulli_positions(state, u, p, positions):
    q = 0
    for k in range(u):
        if _next_double(state) < p:
            positions[q] = k
            q += 1
    return q


@njit(cache=True)
def _binomial_uniform_dense(state, u, p, mask):
    q = _binomial(state, u, p)
    k = 0
    while k < q:
        v = _uniform_below(state, u)
        if mask[v] == 0:
            mask[v] = 1
            k += 1


@njit(cache=True)
def _bernoulli_dense(state, u, p, mask):
    for k in range(u):
        if _next_double(state) < p:
            mask[k] = 1


@njit(cache=True, inline="always")
def _sample_positions(state, u, p, bernoulli, cdf, flags, positions):
    """Training-path mask: Bernoulli scan, or binomial-uniform with ``cdf``."""
    if bernoulli:
        return _bernoulli_positions(state, u, p, positions)
    return _binomial_uniform_positions_cdf(state, u, cdf, flags, positions)


@njit(cache=True)
def _many_positions(state, u, p, iterations, bernoulli, cdf, flags, positions):
    total = 0
    for _ in range(iterations):
        total += _sample_positions(state, u, p, bernoulli, cdf, flags, positions)
    return total


# ---------------------------------------------------------------------------
# public operations


def _check_prob(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return p


def uniform_int(rng: Rng, lo: int, hi: int) -> int:
    """Uniform integer on the inclusive range ``[lo, hi]``."""
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    return int(lo) + int(_uniform_below(rng.state, int(hi) - int(lo) + 1))


def binomial_draw(rng: Rng, u: int, p: float) -> int:
    """Exact Binomial(u, p) variate."""
    p = _check_prob(p)
    if u < 0:
        raise ValueError(f"trial count must be non-negative, got {u}")
    return int(_binomial(rng.state, int(u), p))


def binomial_uniform_mask(rng: Rng, u: int, p: float) -> np.ndarray:
    """Boolean mask of length ``u`` with a Binomial(u, p) number of set bits.

    The bit count is drawn once; positions are then drawn uniformly and a
    position that is already set is simply drawn again.
    """
    p = _check_prob(p)
    if u < 1:
        raise ValueError(f"mask length must be positive, got {u}")
    mask = np.zeros(u, dtype=np.uint8)
    _binomial_uniform_dense(rng.state, int(u), p, mask)
    return mask.view(np.bool_)


def bernoulli_mask(rng: Rng, u: int, p: float) -> np.ndarray:
    """Reference mask: ``u`` independent coin flips, exactly ``u`` draws."""
    p = _check_prob(p)
    if u < 1:
        raise ValueError(f"mask length must be positive, got {u}")
    mask = np.zeros(u, dtype=np.uint8)
    _bernoulli_dense(rng.state, int(u), p, mask)
    return mask.view(np.bool_)


def draw_count(rng: Rng) -> int:
    return rng.draws


SAMPLERS = ("binomial", "bernoulli")


def is_bernoulli(sampler: str) -> bool:
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")
    return sampler == "bernoulli"


@dataclass
class SamplerTiming:
    sampler: str
    seconds_per_call: float
    draws_per_call: float
    set_bits_per_call: float


@dataclass
class SamplerBenchmark:
    u: int
    p: float
    iterations: int
    binomial: SamplerTiming
    bernoulli: SamplerTiming

    @property
    def speedup(self) -> float:
        return self.bernoulli.seconds_per_call / self.binomial.seconds_per_call

    @property
    def draw_ratio(self) -> float:
        return self.bernoulli.draws_per_call / self.binomial.draws_per_call


def benchmark_samplers(u: int, p: float, iterations: int = 100_000, seed: int = 1,
                       repeats: int = 5) -> SamplerBenchmark:
    """Time both mask generators in their sparse training-loop form.

    Each repeat generates ``iterations`` masks inside one compiled loop; the
    fastest repeat is reported.  Draw counts come from the generator's
    counter, averaged over every call made.
    """
    if u < 1:
        raise ValueError(f"mask length must be positive, got {u}")
    p = _check_prob(p)
    if iterations < 1:
        raise ValueError("iterations must be positive")
    flags = np.zeros(u, dtype=np.uint8)
    positions = np.zeros(u, dtype=np.int64)
    # compile and warm caches outside the timed region
    warm = Rng(seed)
    cdf = binomial_cdf(u, p)
    _many_positions(warm.state, u, p, 10, False, cdf, flags, positions)
    _many_positions(warm.state, u, p, 10, True, cdf, flags, positions)

    timings = {}
    for name in SAMPLERS:
        bern = name == "bernoulli"
        rng = Rng(seed)
        best = math.inf
        bits = 0
        for _ in range(repeats):
            t0 = time.perf_counter()
            bits += _many_positions(rng.state, u, p, iterations, bern, cdf, flags, positions)
            best = min(best, time.perf_counter() - t0)
        calls = iterations * repeats
        timings[name] = SamplerTiming(name, best / iterations, rng.draws / calls, bits / calls)
    return SamplerBenchmark(u, p, iterations, timings["binomial"], timings["bernoulli"])
