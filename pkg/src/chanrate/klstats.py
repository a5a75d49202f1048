"""Bernoulli KL divergence, exploration allowance, and confidence-bound solvers.

All confidence bounds are solved on the probability scale (arguments in
[0, 1]) and rescaled by the transmission rate at the boundary, so KL
arguments never leave the unit interval.  The defining problems are

    UCB: largest  q in [p, 1] with  t * I(p, q) <= f,
    LCB: smallest q in [0, p] with  t * I(p, q) <= f,

where ``I`` is the Bernoulli KL divergence, ``p`` the empirical success
rate, ``t`` the sample count and ``f`` the exploration budget.

The solver bisects on ``log(1 - q)`` (upper bound) or ``log(q)`` (lower
bound) rather than on ``q`` itself.  Near-saturated roots sit within a few
float spacings of the boundary, where plain bisection on ``q`` stalls at a
bracket too wide for the target residual; in log space the divergence's
slope is bounded by the bracket construction, which yields a certified
residual of ``(f + 0.75 t) / 2**iters`` and lets the iteration count be
computed up front instead of guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

from .model import DecisionPair

__all__ = [
    "ArmStats",
    "WindowStats",
    "allowance",
    "kl_bernoulli",
    "lcb_index",
    "lcb_probability",
    "ucb_index",
    "ucb_probability",
    "window_ucb_index",
]

# Certified bound on |t * I(p, q) - f| at the returned point; the solver
# may do better.  Two orders of magnitude under the 1e-9 the tests demand,
# leaving room for evaluation error in the probability-scale transform.
_RESIDUAL_BOUND = 1e-10


def kl_bernoulli(p, q):
    """Bernoulli KL divergence I(p, q), elementwise on arrays.

    Conventions: 0*log(0) = 0; the result is +inf when q is 0 or 1 while
    p is not.  Scalar inputs return a float.

    Raises:
        ValueError: if any argument lies outside [0, 1].
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    if np.any((p_arr < 0.0) | (p_arr > 1.0)) or np.any((q_arr < 0.0) | (q_arr > 1.0)):
        raise ValueError("kl_bernoulli arguments must lie in [0, 1]")
    out = rel_entr(p_arr, q_arr) + rel_entr(1.0 - p_arr, 1.0 - q_arr)
    if out.ndim == 0:
        return float(out)
    return out


def allowance(n: int) -> float:
    """Exploration budget after n transmissions: log(n) + 3*log(max(log n, 1)).

    The inner log is clamped at 1 so the log-log term stays defined and
    nonnegative for every n >= 1; the clamp only matters for the handful of
    steps that round-robin initialization covers anyway.
    """
    if n < 1:
        raise ValueError(f"allowance requires n >= 1, got {n}")
    ln = math.log(n)
    return ln + 3.0 * math.log(max(ln, 1.0))


def _allowance_vec(n: np.ndarray) -> np.ndarray:
    # Array counterpart of allowance(); caller guarantees n >= 1.
    ln = np.log(n)
    return ln + 3.0 * np.log(np.maximum(ln, 1.0))


def _bisect_log_space(p, t, f, upper: bool) -> np.ndarray:
    """Solve the confidence-bound equation for strictly interior p.

    Returns q on the probability scale.  ``p``, ``t``, ``f`` are same-shape
    1-D float arrays; every p must lie in (0, 1) and every t must be >= 1.
    """
    pbar = 1.0 - p
    entropy = p * np.log(p) + pbar * np.log(pbar)
    if upper:
        # variable v = log(1 - q); I = entropy - p*log1p(-e^v) - pbar*v
        anchor = np.log(pbar)
        slope_coeff = pbar
        weight = p
    else:
        # variable v = log(q); I = entropy - p*v - pbar*log1p(-e^v)
        anchor = np.log(p)
        slope_coeff = p
        weight = pbar
    target = f / t
    hi = anchor.copy()
    # At anchor - (f/t + 0.75)/slope_coeff the divergence provably exceeds
    # f/t (the spare 0.75 absorbs the entropy term), so the root is bracketed.
    lo = anchor - (target + 0.75) / slope_coeff

    # |d(t*I)/dv| <= t * slope_coeff on the bracket, so the residual at the
    # feasible end is at most width * t * slope_coeff = (f + 0.75 t) / 2**it.
    worst = float(np.max(f)) + 0.75 * float(np.max(t))
    iters = max(1, math.ceil(math.log2(worst / _RESIDUAL_BOUND)))

    mid = np.empty_like(hi)
    lnq = np.empty_like(hi)
    val = np.empty_like(hi)
    feas = np.empty(hi.shape, dtype=bool)
    for _ in range(iters):
        np.add(lo, hi, out=mid)
        mid *= 0.5
        np.exp(mid, out=lnq)
        np.negative(lnq, out=lnq)
        np.log1p(lnq, out=lnq)
        np.multiply(weight, lnq, out=val)
        np.multiply(slope_coeff, mid, out=lnq)
        val += lnq
        np.subtract(entropy, val, out=val)
        np.less_equal(val, target, out=feas)
        np.copyto(hi, mid, where=feas)
        np.copyto(lo, mid, where=~feas)
    if upper:
        q = -np.expm1(hi)
        np.maximum(q, p, out=q)
        np.minimum(q, 1.0, out=q)
    else:
        q = np.exp(hi)
        np.minimum(q, p, out=q)
        np.maximum(q, 0.0, out=q)
    return q


def _solve_probability(p_hat, pulls, budget, upper: bool):
    p = np.asarray(p_hat, dtype=float)
    t = np.asarray(pulls, dtype=float)
    f = np.asarray(budget, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("empirical rate must lie in [0, 1]")
    if np.any(t < 0):
        raise ValueError("pull counts must be nonnegative")
    if np.any(f < 0):
        raise ValueError("budget must be nonnegative")
    scalar = p.ndim == 0 and t.ndim == 0 and f.ndim == 0
    p, t, f = np.broadcast_arrays(p, t, f)
    shape = p.shape
    p = p.ravel()
    t = t.ravel()
    f = f.ravel()

    out = np.empty(p.shape, dtype=float)
    pulled = t > 0
    if upper:
        out[~pulled] = 1.0
        hits_one = pulled & (p >= 1.0)
        out[hits_one] = 1.0  # I(1, q) infinite below 1, zero at 1
        zeros = pulled & (p <= 0.0)
        if np.any(zeros):
            # t * (-log(1 - q)) = f
            out[zeros] = -np.expm1(-f[zeros] / t[zeros])
        interior = pulled & (p > 0.0) & (p < 1.0)
        if np.any(interior):
            out[interior] = _bisect_log_space(p[interior], t[interior], f[interior], upper=True)
    else:
        out[~pulled] = 0.0
        hits_zero = pulled & (p <= 0.0)
        out[hits_zero] = 0.0
        ones = pulled & (p >= 1.0)
        if np.any(ones):
            # t * (-log(q)) = f
            out[ones] = np.exp(-f[ones] / t[ones])
        interior = pulled & (p > 0.0) & (p < 1.0)
        if np.any(interior):
            out[interior] = _bisect_log_space(p[interior], t[interior], f[interior], upper=False)
    out = out.reshape(shape)
    if scalar:
        return float(out)
    return out


def ucb_probability(p_hat, pulls, budget):
    """Upper confidence bound on the success probability.

    Vectorized: arguments broadcast together.  Unpulled entries (pulls == 0)
    return 1, the maximally optimistic value.
    """
    return _solve_probability(p_hat, pulls, budget, upper=True)


def lcb_probability(p_hat, pulls, budget):
    """Lower confidence bound on the success probability; unpulled entries give 0."""
    return _solve_probability(p_hat, pulls, budget, upper=False)


@dataclass
class ArmStats:
    """Full-history pull and success counts for one (channel, rate) pair."""

    pulls: int = 0
    successes: int = 0

    def __post_init__(self) -> None:
        if self.pulls < 0 or self.successes < 0 or self.successes > self.pulls:
            raise ValueError(f"inconsistent counts: {self.successes}/{self.pulls}")

    def record(self, outcome: int) -> None:
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        self.pulls += 1
        self.successes += outcome

    def success_rate(self) -> float:
        """Empirical success probability; 0 by convention before the first pull."""
        if self.pulls == 0:
            return 0.0
        return self.successes / self.pulls

    def empirical_mean(self, rate: float) -> float:
        """Empirical throughput: rate times the success rate."""
        return rate * self.success_rate()


class WindowStats:
    """Per-pair statistics over the last ``window`` global decision steps.

    Each push records one global step: the selected pair (or None for a step
    that selected nothing) and its outcome bit.  Once the buffer is full the
    oldest step falls out, so per-pair counts always reflect at most
    ``window`` most recent steps and sum to the window size exactly when
    every slot holds a real decision.
    """

    def __init__(self, channels: int, n_rates: int, window: int) -> None:
        if channels < 1 or n_rates < 1:
            raise ValueError("need at least one channel and one rate")
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self._n_rates = n_rates
        self._window = window
        self._ring_pair = np.full(window, -1, dtype=np.int64)  # flat pair id, -1 empty
        self._ring_outcome = np.zeros(window, dtype=np.int8)
        self._pos = 0
        self._steps = 0
        self._pulls = np.zeros((channels, n_rates), dtype=np.int64)
        self._successes = np.zeros((channels, n_rates), dtype=np.int64)

    @property
    def window(self) -> int:
        return self._window

    @property
    def steps(self) -> int:
        """Total steps pushed since construction (not capped at the window)."""
        return self._steps

    def push(self, pair: DecisionPair | tuple[int, int] | None, outcome: int) -> None:
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        old = self._ring_pair[self._pos]
        if old >= 0:
            c, k = divmod(int(old), self._n_rates)
            self._pulls[c, k] -= 1
            self._successes[c, k] -= self._ring_outcome[self._pos]
        if pair is None:
            self._ring_pair[self._pos] = -1
            self._ring_outcome[self._pos] = 0
        else:
            c, k = pair
            self._pulls[c - 1, k - 1] += 1
            self._successes[c - 1, k - 1] += outcome
            self._ring_pair[self._pos] = (c - 1) * self._n_rates + (k - 1)
            self._ring_outcome[self._pos] = outcome
        self._pos = (self._pos + 1) % self._window
        self._steps += 1

    def pulls(self, pair: DecisionPair | tuple[int, int]) -> int:
        c, k = pair
        return int(self._pulls[c - 1, k - 1])

    def successes(self, pair: DecisionPair | tuple[int, int]) -> int:
        c, k = pair
        return int(self._successes[c - 1, k - 1])

    def success_rate(self, pair: DecisionPair | tuple[int, int]) -> float:
        t = self.pulls(pair)
        if t == 0:
            return 0.0
        return self.successes(pair) / t

    def empirical_mean(self, pair: DecisionPair | tuple[int, int], rate: float) -> float:
        return rate * self.success_rate(pair)

    def pulls_matrix(self) -> np.ndarray:
        return self._pulls.copy()


def ucb_index(stats: ArmStats, rate: float, budget: float) -> float:
    """Largest throughput in [empirical mean, rate] compatible with the budget.

    Solves rate * max{q : pulls * I(p_hat, q) <= budget} where p_hat is the
    empirical success rate.  An unpulled arm returns the full rate.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    return rate * ucb_probability(stats.success_rate(), stats.pulls, budget)


def lcb_index(stats: ArmStats, rate: float, budget: float) -> float:
    """Pessimistic counterpart of :func:`ucb_index`; unpulled arms return 0."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return rate * lcb_probability(stats.success_rate(), stats.pulls, budget)


def window_ucb_index(ws: WindowStats, pair: DecisionPair | tuple[int, int], rate: float) -> float:
    """Windowed optimistic index with constant budget allowance(window).

    The sample count inside the window multiplies the divergence exactly as
    the full-history index does with its total pull count; only the budget
    switches from allowance(step) to the constant allowance(window).
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    budget = allowance(ws.window)
    return rate * ucb_probability(ws.success_rate(pair), ws.pulls(pair), budget)
