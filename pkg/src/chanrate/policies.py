"""Sequential decision policies over (channel, rate) pairs.

Three index policies share one interface: an optimism-only rule ranking
every pair by its upper confidence index (`KlUcbPolicy`), a per-channel
leader/test rule exploiting rate unimodality inside each channel
(`CrsTPolicy`), and a global-leader rule exploring only the neighborhood
graph around the empirically best pair (`KlUcbUPolicy`).  Each accepts a
``window`` argument that swaps every statistic (sample counts, empirical
means, confidence bounds, and for the leader policy its leadership counts)
for sliding-window versions, which is what tracks drifting environments.

Every policy starts with one round-robin pass over all pairs in row-major
order, then alternates select/update strictly: ``select()`` proposes the
pair for the next transmission and ``update(pair, outcome)`` feeds back the
acknowledgement bit.  All argmax/argmin ties break lexicographically by
(channel, rate).

Policies are internally vectorized over ``batch`` independent replications
that advance in lock-step (one per environment seed); the scalar interface
is the batch=1 special case.  ``select_batch``/``update_batch`` expose the
vector form to the experiment harness.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .graph import NeighborhoodGraph, build_graph
from .klstats import _allowance_vec, allowance, lcb_probability, ucb_probability
from .model import DecisionPair, RateSet, flat_to_pair

__all__ = [
    "BasePolicy",
    "CrsTPolicy",
    "CrsTState",
    "KlUcbPolicy",
    "KlUcbState",
    "KlUcbUPolicy",
    "KlUcbUState",
    "build_policy",
    "make_windowed",
]


@dataclass(frozen=True)
class KlUcbState:
    """Snapshot of one replication's statistics."""

    pulls: np.ndarray
    successes: np.ndarray
    step: int


@dataclass(frozen=True)
class CrsTState(KlUcbState):
    """Adds the per-channel leaders and the channels whose leader test fails."""

    leaders: tuple[int, ...]
    undecided: tuple[int, ...]


@dataclass(frozen=True)
class KlUcbUState(KlUcbState):
    """Adds the global leader and how often each pair has led."""

    leader: DecisionPair
    leadership_counts: np.ndarray
    gamma: int


class BasePolicy:
    """Shared bookkeeping: counts, round-robin prefix, windowing, batching."""

    kind = "base"

    def __init__(
        self,
        rates: RateSet | Iterable[float],
        channels: int,
        *,
        window: int | None = None,
        batch: int = 1,
        budget: Callable[[int], float] | None = None,
    ) -> None:
        self._rates = rates if isinstance(rates, RateSet) else RateSet.of(rates)
        if channels < 1:
            raise ValueError("need at least one channel")
        if batch < 1:
            raise ValueError("batch must be >= 1")
        if window is not None and window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self._channels = channels
        self._n_rates = len(self._rates)
        self._n_pairs = channels * self._n_rates
        self._batch = batch
        self._window = window
        self._budget_override = budget
        self._r_flat = np.tile(self._rates.as_array(), channels)
        self._r_row = self._rates.as_array()
        self._lanes = np.arange(batch)
        self.reset()

    # -- public surface -------------------------------------------------

    @property
    def label(self) -> str:
        if self._window is None:
            return self.kind
        return f"{self.kind}-w{self._window}"

    @property
    def channels(self) -> int:
        return self._channels

    @property
    def n_rates(self) -> int:
        return self._n_rates

    @property
    def batch(self) -> int:
        return self._batch

    @property
    def window(self) -> int | None:
        return self._window

    @property
    def step(self) -> int:
        """Completed transmissions (identical across the batch)."""
        return self._step

    def reset(self) -> None:
        S, P = self._batch, self._n_pairs
        self._step = 0
        self._pending: np.ndarray | None = None
        self._pulls = np.zeros((S, P), dtype=np.int64)
        self._successes = np.zeros((S, P), dtype=np.int64)
        if self._window is not None:
            self._ring_pair = np.full((S, self._window), -1, dtype=np.int64)
            self._ring_out = np.zeros((S, self._window), dtype=np.int8)
            self._ring_pos = 0
        self._reset_extra()

    def select(self) -> DecisionPair:
        """Pair to use for the next transmission (scalar interface)."""
        self._require_scalar()
        return flat_to_pair(int(self.select_batch()[0]), self._n_rates)

    def update(self, pair: DecisionPair | tuple[int, int], outcome: int) -> None:
        """Record the outcome bit of the last selected pair."""
        self._require_scalar()
        c, k = pair
        flat = (c - 1) * self._n_rates + (k - 1)
        self.update_batch(
            np.array([flat], dtype=np.int64), np.array([outcome], dtype=np.int64)
        )

    def select_batch(self) -> np.ndarray:
        """Flat pair ids for the next transmission, one per replication."""
        if self._pending is not None:
            raise RuntimeError("select called twice without an update in between")
        if self._step < self._n_pairs:
            flats = np.full(self._batch, self._step, dtype=np.int64)
        else:
            flats = self._select_impl()
        self._pending = flats
        return flats

    def update_batch(self, flats: np.ndarray, outcomes: np.ndarray) -> None:
        if self._pending is None:
            raise RuntimeError("update called before select")
        flats = np.asarray(flats, dtype=np.int64)
        outcomes = np.asarray(outcomes, dtype=np.int64)
        if flats.shape != (self._batch,) or outcomes.shape != (self._batch,):
            raise ValueError(f"expected arrays of shape ({self._batch},)")
        if not np.array_equal(flats, self._pending):
            raise ValueError("updated pair differs from the selected pair")
        if np.any((outcomes != 0) & (outcomes != 1)):
            raise ValueError("outcomes must be 0 or 1")
        if self._window is not None:
            self._evict()
            pos = self._ring_pos
            self._ring_pair[:, pos] = flats
            self._ring_out[:, pos] = outcomes
        self._pulls[self._lanes, flats] += 1
        self._successes[self._lanes, flats] += outcomes
        self._step += 1
        self._pending = None
        self._after_update()
        if self._window is not None:
            self._ring_pos = (self._ring_pos + 1) % self._window

    def clone(self) -> "BasePolicy":
        """Independent deep copy, including any pending selection."""
        return copy.deepcopy(self)

    def state(self, lane: int = 0) -> KlUcbState:
        """Diagnostic snapshot of one replication."""
        return KlUcbState(
            pulls=self._pulls[lane].reshape(self._channels, self._n_rates).copy(),
            successes=self._successes[lane].reshape(self._channels, self._n_rates).copy(),
            step=self._step,
        )

    # -- subclass hooks ---------------------------------------------------

    def _reset_extra(self) -> None:
        pass

    def _after_update(self) -> None:
        pass

    def _select_impl(self) -> np.ndarray:
        raise NotImplementedError

    # -- shared internals -------------------------------------------------

    def _require_scalar(self) -> None:
        if self._batch != 1:
            raise RuntimeError("scalar select/update require batch=1; use the *_batch forms")

    def _evict(self) -> None:
        old = self._ring_pair[:, self._ring_pos]
        has = old >= 0
        if np.any(has):
            lanes = self._lanes[has]
            arms = old[has]
            self._pulls[lanes, arms] -= 1
            self._successes[lanes, arms] -= self._ring_out[has, self._ring_pos]

    def _success_rates(self) -> np.ndarray:
        p = np.zeros((self._batch, self._n_pairs), dtype=float)
        np.divide(self._successes, self._pulls, out=p, where=self._pulls > 0)
        return p

    def _scalar_budget(self) -> float:
        """Budget for policies whose allowance argument is the step count."""
        if self._budget_override is not None:
            return self._budget_override(self._step)
        if self._window is not None:
            return allowance(self._window)
        return allowance(self._step)


class KlUcbPolicy(BasePolicy):
    """Play the pair with the highest optimistic throughput index.

    The index of a pair is the largest throughput statistically compatible
    with its samples at budget allowance(n), where n counts completed
    transmissions (or allowance(window) for the windowed variant).  The
    policy is structure-blind: it never looks at channel or rate adjacency.
    """

    kind = "kl-ucb"

    def _select_impl(self) -> np.ndarray:
        f = self._scalar_budget()
        q = ucb_probability(self._success_rates(), self._pulls, f)
        np.multiply(q, self._r_flat, out=q)
        return np.argmax(q, axis=1)


class CrsTPolicy(BasePolicy):
    """Per-channel leader rule for channels with unimodal throughput in rate.

    Each channel's leader is its empirically best rate.  A channel is
    "decided" when the leader's lower confidence index dominates the upper
    indices of the adjacent rates.  While any channel is undecided, the
    lowest-indexed such channel is probed at whichever of the leader's
    closed rate-neighborhood {leader-1, leader, leader+1} has the fewest
    pulls; once every channel is decided, the policy plays the leader with
    the highest upper confidence index across channels.
    """

    kind = "crs-t"

    def _leaders(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        S, C, K = self._batch, self._channels, self._n_rates
        p = self._success_rates().reshape(S, C, K)
        t = self._pulls.reshape(S, C, K)
        mu_hat = p * self._r_row
        lead = np.argmax(mu_hat, axis=2)  # first max = smallest rate index
        return p, t, lead

    def _undecided(
        self, p: np.ndarray, t: np.ndarray, lead: np.ndarray, f: float
    ) -> np.ndarray:
        S, C, K = self._batch, self._channels, self._n_rates
        lanes = self._lanes[:, None]
        chans = np.arange(C)[None, :]
        p_lead = p[lanes, chans, lead]
        t_lead = t[lanes, chans, lead]
        lcb = lcb_probability(p_lead, t_lead, f) * self._r_row[lead]
        sup = np.full((S, C), -np.inf)
        for delta in (-1, 1):
            kn = lead + delta
            valid = (kn >= 0) & (kn < K)
            kc = np.clip(kn, 0, K - 1)
            q = ucb_probability(p[lanes, chans, kc], t[lanes, chans, kc], f)
            q *= self._r_row[kc]
            sup = np.maximum(sup, np.where(valid, q, -np.inf))
        return lcb < sup  # leader not yet separated from its rate neighbors

    def _select_impl(self) -> np.ndarray:
        S, C, K = self._batch, self._channels, self._n_rates
        f = self._scalar_budget()
        p, t, lead = self._leaders()
        undecided = self._undecided(p, t, lead, f)
        explore = undecided.any(axis=1)

        # Exploration: lowest undecided channel, least-pulled rate among the
        # leader's closed neighborhood (ties to the smallest rate index).
        ch_ex = np.argmax(undecided, axis=1)
        lead_ex = lead[self._lanes, ch_ex]
        cand = lead_ex[:, None] + np.array([-1, 0, 1])
        valid = (cand >= 0) & (cand < K)
        cand_c = np.clip(cand, 0, K - 1)
        pulls_c = t[self._lanes[:, None], ch_ex[:, None], cand_c].astype(float)
        pulls_c[~valid] = np.inf
        k_ex = cand_c[self._lanes, np.argmin(pulls_c, axis=1)]
        flat_ex = ch_ex * K + k_ex

        # Exploitation: leader with the highest upper index across channels.
        lanes = self._lanes[:, None]
        chans = np.arange(C)[None, :]
        b = ucb_probability(p[lanes, chans, lead], t[lanes, chans, lead], f)
        b *= self._r_row[lead]
        ch_xp = np.argmax(b, axis=1)
        flat_xp = ch_xp * K + lead[self._lanes, ch_xp]

        return np.where(explore, flat_ex, flat_xp)

    def state(self, lane: int = 0) -> CrsTState:
        base = super().state(lane)
        p, t, lead = self._leaders()
        if self._step >= 1:
            undecided_mask = self._undecided(p, t, lead, self._scalar_budget())[lane]
        else:
            undecided_mask = np.ones(self._channels, dtype=bool)
        return CrsTState(
            pulls=base.pulls,
            successes=base.successes,
            step=base.step,
            leaders=tuple(int(k) + 1 for k in lead[lane]),
            undecided=tuple(int(c) + 1 for c in np.nonzero(undecided_mask)[0]),
        )


class KlUcbUPolicy(BasePolicy):
    """Leader-centric rule exploring only the neighborhood graph.

    After each update the global leader is the pair with the highest
    empirical throughput.  Leadership counts v pace a forced-play schedule:
    whenever (v[leader] - 1) is a multiple of the graph's maximum out-degree
    gamma, the leader itself is played; otherwise the policy plays the best
    optimistic index among the leader's out-neighbors, with budget
    allowance(v[leader]).  The candidate set includes the leader itself by
    default so it can be exploited between forced plays; pass
    ``include_leader=False`` to restrict the non-forced play to the
    out-neighbors only.

    With a window, sample statistics and leadership counts alike are
    evaluated over the last ``window`` steps.
    """

    kind = "kl-ucb-u"

    def __init__(
        self,
        rates: RateSet | Iterable[float],
        channels: int,
        *,
        window: int | None = None,
        batch: int = 1,
        budget: Callable[[int], float] | None = None,
        graph: NeighborhoodGraph | None = None,
        include_leader: bool = True,
    ) -> None:
        n_rates = len(rates) if isinstance(rates, RateSet) else len(tuple(rates))
        if graph is None:
            graph = build_graph(channels, n_rates)
        elif graph.channels != channels or graph.n_rates != n_rates:
            raise ValueError("graph shape does not match the policy dimensions")
        self.graph = graph
        self._include_leader = include_leader
        self._cand_table = self._build_candidates(graph, include_leader)
        super().__init__(rates, channels, window=window, batch=batch, budget=budget)

    @staticmethod
    def _build_candidates(graph: NeighborhoodGraph, include_leader: bool) -> np.ndarray:
        K = graph.n_rates
        rows = []
        for flat, nbrs in enumerate(graph.adjacency):
            ids = [(c - 1) * K + (k - 1) for c, k in nbrs]
            if include_leader:
                ids.append(flat)
            rows.append(sorted(ids))
        width = max(len(row) for row in rows)
        table = np.full((len(rows), width), -1, dtype=np.int64)
        for flat, row in enumerate(rows):
            table[flat, : len(row)] = row
        return table

    @property
    def gamma(self) -> int:
        return self.graph.gamma

    @property
    def include_leader(self) -> bool:
        return self._include_leader

    def _reset_extra(self) -> None:
        S = self._batch
        self._lead_counts = np.zeros((S, self._n_pairs), dtype=np.int64)
        self._leader = np.zeros(S, dtype=np.int64)
        if self._window is not None:
            self._lead_ring = np.full((S, self._window), -1, dtype=np.int64)

    def _after_update(self) -> None:
        # Leadership counts include the leader after the current step.
        mu_hat = self._success_rates()
        np.multiply(mu_hat, self._r_flat, out=mu_hat)
        self._leader = np.argmax(mu_hat, axis=1)
        if self._window is not None:
            pos = self._ring_pos
            old = self._lead_ring[:, pos]
            has = old >= 0
            if np.any(has):
                self._lead_counts[self._lanes[has], old[has]] -= 1
            self._lead_ring[:, pos] = self._leader
        self._lead_counts[self._lanes, self._leader] += 1

    def _select_impl(self) -> np.ndarray:
        lead = self._leader
        if self.gamma == 0:  # single-vertex graph: the leader is the only pair
            return lead.copy()
        v_lead = self._lead_counts[self._lanes, lead]
        forced = (v_lead - 1) % self.gamma == 0

        if self._budget_override is not None:
            f = np.array([self._budget_override(int(v)) for v in v_lead])
        else:
            f = _allowance_vec(v_lead.astype(float))
        cands = self._cand_table[lead]
        mask = cands >= 0
        safe = np.maximum(cands, 0)
        p = np.take_along_axis(self._success_rates(), safe, axis=1)
        t = np.take_along_axis(self._pulls, safe, axis=1)
        q = ucb_probability(p, t, f[:, None])
        np.multiply(q, self._r_flat[safe], out=q)
        q[~mask] = -np.inf
        best_col = np.argmax(q, axis=1)  # candidate rows sorted: first max wins
        pick = cands[self._lanes, best_col]
        return np.where(forced, lead, pick)

    def state(self, lane: int = 0) -> KlUcbUState:
        base = super().state(lane)
        return KlUcbUState(
            pulls=base.pulls,
            successes=base.successes,
            step=base.step,
            leader=flat_to_pair(int(self._leader[lane]), self._n_rates),
            leadership_counts=self._lead_counts[lane]
            .reshape(self._channels, self._n_rates)
            .copy(),
            gamma=self.gamma,
        )


_POLICY_KINDS: dict[str, type[BasePolicy]] = {
    "kl-ucb": KlUcbPolicy,
    "crs-t": CrsTPolicy,
    "kl-ucb-u": KlUcbUPolicy,
}


def build_policy(
    kind: str,
    rates: RateSet | Iterable[float],
    channels: int,
    *,
    window: int | None = None,
    batch: int = 1,
    strict: bool = False,
    budget: Callable[[int], float] | None = None,
) -> BasePolicy:
    """Construct a policy by kind name ("kl-ucb", "crs-t", "kl-ucb-u").

    ``strict`` only applies to "kl-ucb-u" and removes the leader from the
    non-forced candidate set.
    """
    key = kind.strip().lower()
    if key not in _POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}; expected one of {sorted(_POLICY_KINDS)}")
    if key == "kl-ucb-u":
        return KlUcbUPolicy(
            rates, channels, window=window, batch=batch, budget=budget,
            include_leader=not strict,
        )
    if strict:
        raise ValueError(f"strict mode is only meaningful for kl-ucb-u, not {kind!r}")
    return _POLICY_KINDS[key](rates, channels, window=window, batch=batch, budget=budget)


def make_windowed(kind: str, window: int) -> Callable[..., BasePolicy]:
    """Factory for sliding-window policy variants.

    Returns a builder with the same signature as :func:`build_policy` minus
    the kind and window, e.g.::

        build = make_windowed("kl-ucb-u", window=2000)
        policy = build(rates, channels, batch=50)
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")

    def build(rates, channels, **kwargs):
        return build_policy(kind, rates, channels, window=window, **kwargs)

    return build
