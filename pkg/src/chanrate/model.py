"""Static link model: rate sets, success-probability tables, and optima.

Everything downstream (policies, bounds, environments) consumes the types
defined here.  A link is described by an ordered set of transmission rates,
a channels x rates matrix of packet success probabilities, and optionally a
per-channel occupancy probability that scales successes down.  Channel and
rate indices are 1-based throughout the public API; flat row-major ids are
used internally and exposed through :func:`pair_to_flat` / :func:`flat_to_pair`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "DecisionPair",
    "DegenerateOptimumError",
    "LinkModel",
    "OptimaSummary",
    "RateSet",
    "compute_optima",
    "demo_model",
    "flat_to_pair",
    "load_rates_json",
    "load_theta_csv",
    "pair_to_flat",
    "save_theta_csv",
    "throughput_matrix",
]


class DegenerateOptimumError(ValueError):
    """Raised where a computation requires a unique best pair and the model ties."""


class DecisionPair(NamedTuple):
    """One arm of the bandit: transmit on ``channel`` at rate index ``rate_index``.

    Both fields are 1-based.
    """

    channel: int
    rate_index: int


def pair_to_flat(pair: DecisionPair | tuple[int, int], n_rates: int) -> int:
    """Row-major flat id of a 1-based (channel, rate) pair."""
    c, k = pair
    return (c - 1) * n_rates + (k - 1)


def flat_to_pair(flat: int, n_rates: int) -> DecisionPair:
    """Inverse of :func:`pair_to_flat`."""
    c, k = divmod(int(flat), n_rates)
    return DecisionPair(c + 1, k + 1)


@dataclass(frozen=True)
class RateSet:
    """Strictly increasing, positive transmission rates.

    Rates are abstract reward units per packet; in the wireless reading they
    are Mbit/s and a packet at rate ``r`` occupies ``1/r`` time units.
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise ValueError("rate set must contain at least one rate")
        vals = tuple(float(v) for v in self.values)
        if any(v <= 0 for v in vals):
            raise ValueError("rates must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("rates must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, rates: Iterable[float]) -> "RateSet":
        return cls(tuple(float(r) for r in rates))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def rate(self, rate_index: int) -> float:
        """Rate value for a 1-based index."""
        if not 1 <= rate_index <= len(self.values):
            raise IndexError(f"rate index {rate_index} out of range 1..{len(self.values)}")
        return self.values[rate_index - 1]


@dataclass(frozen=True)
class LinkModel:
    """A rate set plus the success-probability table, optionally occupancy-scaled.

    ``theta[c-1, k-1]`` is the probability that a packet sent on channel ``c``
    at rate index ``k`` is acknowledged, conditional on the channel being free.
    ``occupancy[c-1]``, when given, is the probability the channel is busy; the
    effective success probability becomes ``(1 - occupancy) * theta``.
    """

    rates: RateSet
    theta: np.ndarray
    occupancy: np.ndarray | None = None

    def __post_init__(self) -> None:
        th = np.array(self.theta, dtype=float)
        if th.ndim != 2:
            raise ValueError("theta must be a 2-D channels x rates matrix")
        if th.shape[1] != len(self.rates):
            raise ValueError(
                f"theta has {th.shape[1]} rate columns but the rate set has {len(self.rates)}"
            )
        if th.shape[0] < 1:
            raise ValueError("at least one channel required")
        if np.any((th < 0.0) | (th > 1.0)):
            raise ValueError("theta entries must lie in [0, 1]")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)
        if self.occupancy is not None:
            occ = np.array(self.occupancy, dtype=float)
            if occ.shape != (th.shape[0],):
                raise ValueError("occupancy must have one entry per channel")
            if np.any((occ < 0.0) | (occ > 1.0)):
                raise ValueError("occupancy entries must lie in [0, 1]")
            occ.setflags(write=False)
            object.__setattr__(self, "occupancy", occ)

    @property
    def channels(self) -> int:
        return self.theta.shape[0]

    @property
    def n_rates(self) -> int:
        return self.theta.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.theta.shape[0] * self.theta.shape[1]

    def effective_theta(self) -> np.ndarray:
        """Success probabilities after occupancy scaling (a copy)."""
        if self.occupancy is None:
            return self.theta.copy()
        return (1.0 - self.occupancy)[:, None] * self.theta

    def pairs(self) -> list[DecisionPair]:
        """All decision pairs in flat (row-major) order."""
        return [
            DecisionPair(c, k)
            for c in range(1, self.channels + 1)
            for k in range(1, self.n_rates + 1)
        ]


def throughput_matrix(model: LinkModel) -> np.ndarray:
    """Expected reward per transmission for each pair: ``rate * effective_theta``."""
    return model.effective_theta() * model.rates.as_array()[None, :]


@dataclass(frozen=True)
class OptimaSummary:
    """Derived optima of a link model.

    All rate-index sets are 1-based tuples.  ``viable_rates`` collects the
    rate indices whose raw rate meets or exceeds the best throughput; by rate
    monotonicity it is always a suffix ``{first_viable, ..., K}`` of the rate
    list, with ``first_viable == K + 1`` encoding the empty set.
    ``viable_adjacent`` intersects that set with the two rate indices adjacent
    to the best pair's rate.  The ``*_by_channel`` fields repeat the same
    construction channel by channel around each channel's own best rate.

    Ties are reported through the ``unique_*`` flags and never broken
    silently; where several pairs attain the maximum, ``best`` holds the
    lexicographically smallest.
    """

    mu: np.ndarray
    mu_star: float
    best: DecisionPair
    unique_global: bool
    best_rate_by_channel: tuple[int, ...]
    best_mu_by_channel: tuple[float, ...]
    unique_per_channel: tuple[bool, ...]
    viable_rates: tuple[int, ...]
    first_viable: int
    viable_adjacent: tuple[int, ...]
    viable_rates_by_channel: tuple[tuple[int, ...], ...] = field(repr=False)
    first_viable_by_channel: tuple[int, ...] = field(repr=False)
    viable_adjacent_by_channel: tuple[tuple[int, ...], ...] = field(repr=False)


def _viable_suffix(rates: np.ndarray, threshold: float) -> tuple[int, ...]:
    # Rates are strictly increasing, so {k: r_k >= threshold} is a suffix.
    return tuple(int(k) for k in range(1, len(rates) + 1) if rates[k - 1] >= threshold)


def _adjacent(viable: tuple[int, ...], peak: int, n_rates: int) -> tuple[int, ...]:
    members = set(viable)
    return tuple(k for k in (peak - 1, peak + 1) if 1 <= k <= n_rates and k in members)


def compute_optima(model: LinkModel) -> OptimaSummary:
    """Compute best pairs, per-channel bests, and the viable-rate sets.

    Tie detection compares computed throughputs exactly; inputs are typically
    user-supplied rationals and epsilon-merging would hide modeling errors.
    """
    mu = throughput_matrix(model)
    rates = model.rates.as_array()
    C, K = mu.shape

    flat_best = int(np.argmax(mu))  # first maximum = lexicographically smallest pair
    best = flat_to_pair(flat_best, K)
    mu_star = float(mu.flat[flat_best])
    unique_global = int(np.count_nonzero(mu == mu_star)) == 1

    best_rate_by_channel: list[int] = []
    best_mu_by_channel: list[float] = []
    unique_per_channel: list[bool] = []
    viable_by_channel: list[tuple[int, ...]] = []
    first_viable_by_channel: list[int] = []
    adjacent_by_channel: list[tuple[int, ...]] = []
    for c in range(C):
        row = mu[c]
        k_best = int(np.argmax(row)) + 1
        mu_best = float(row[k_best - 1])
        best_rate_by_channel.append(k_best)
        best_mu_by_channel.append(mu_best)
        unique_per_channel.append(int(np.count_nonzero(row == mu_best)) == 1)
        viable_c = _viable_suffix(rates, mu_best)
        viable_by_channel.append(viable_c)
        first_viable_by_channel.append(viable_c[0] if viable_c else K + 1)
        adjacent_by_channel.append(_adjacent(viable_c, k_best, K))

    viable = _viable_suffix(rates, mu_star)
    return OptimaSummary(
        mu=mu,
        mu_star=mu_star,
        best=best,
        unique_global=unique_global,
        best_rate_by_channel=tuple(best_rate_by_channel),
        best_mu_by_channel=tuple(best_mu_by_channel),
        unique_per_channel=tuple(unique_per_channel),
        viable_rates=viable,
        first_viable=viable[0] if viable else K + 1,
        viable_adjacent=_adjacent(viable, best.rate_index, K),
        viable_rates_by_channel=tuple(viable_by_channel),
        first_viable_by_channel=tuple(first_viable_by_channel),
        viable_adjacent_by_channel=tuple(adjacent_by_channel),
    )


def load_theta_csv(path: str | Path) -> np.ndarray:
    """Load a success-probability table from CSV.

    Expected layout: header ``channel,<label>,...`` with one column per rate,
    then one row per channel.  Channel ids must be 1..C in order; rate column
    labels are ignored.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty theta CSV") from None
        if not header or header[0].strip().lower() != "channel":
            raise ValueError(f"{path}: first header column must be 'channel'")
        n_rates = len(header) - 1
        if n_rates < 1:
            raise ValueError(f"{path}: no rate columns")
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != n_rates + 1:
                raise ValueError(f"{path}:{lineno}: expected {n_rates + 1} columns, got {len(row)}")
            cid = int(row[0])
            if cid != len(rows) + 1:
                raise ValueError(f"{path}:{lineno}: channel ids must run 1..C in order, got {cid}")
            rows.append([float(cell) for cell in row[1:]])
    if not rows:
        raise ValueError(f"{path}: no channel rows")
    theta = np.asarray(rows, dtype=float)
    if np.any((theta < 0.0) | (theta > 1.0)):
        raise ValueError(f"{path}: values must lie in [0, 1]")
    return theta


def save_theta_csv(path: str | Path, theta: np.ndarray, rates: Sequence[float] | None = None) -> None:
    """Write a theta matrix in the format read by :func:`load_theta_csv`."""
    theta = np.asarray(theta, dtype=float)
    labels = [repr(float(r)) for r in rates] if rates is not None else [
        f"rate{k}" for k in range(1, theta.shape[1] + 1)
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", *labels])
        for c in range(theta.shape[0]):
            writer.writerow([c + 1, *[repr(float(v)) for v in theta[c]]])


def load_rates_json(path: str | Path) -> tuple[RateSet, np.ndarray | None]:
    """Load rates (and optional per-channel occupancy) from JSON.

    Accepts either a bare list ``[r1, r2, ...]`` or an object with a ``rates``
    key and an optional ``occupancy`` key.
    """
    path = Path(path)
    with path.open() as fh:
        data = json.load(fh)
    if isinstance(data, list):
        return RateSet.of(data), None
    if isinstance(data, dict):
        if "rates" not in data:
            raise ValueError(f"{path}: missing 'rates' key")
        occupancy = data.get("occupancy")
        occ = None if occupancy is None else np.asarray(occupancy, dtype=float)
        return RateSet.of(data["rates"]), occ
    raise ValueError(f"{path}: expected a JSON list or object")


# IEEE 802.11g-style table used in docs and tests: 5 channels, 8 rates.
_DEMO_RATES = (6.0, 13.0, 19.5, 26.0, 39.0, 52.0, 58.5, 65.0)
_DEMO_THETA = (
    (1.0, 1.0, 1.0, 1.0, 1.0, 0.2, 0.0, 0.0),
    (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.7, 0.1),
    (1.0, 1.0, 1.0, 1.0, 1.0, 0.6, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    (1.0, 1.0, 0.8, 0.2, 0.0, 0.0, 0.0, 0.0),
)


def demo_model() -> LinkModel:
    """The bundled 5-channel, 8-rate stationary benchmark table.

    Channel 2 at 52 Mbit/s is the unique best pair (throughput 52); channel 4
    is entirely dead, which exercises every degenerate-row code path.
    """
    return LinkModel(RateSet.of(_DEMO_RATES), np.array(_DEMO_THETA))
