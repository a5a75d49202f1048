"""Reward environments: stationary, trace-driven, and synthetic drift.

The contract every environment honors is *common random numbers*: the
Bernoulli outcome of playing pair ``(c, k)`` at step ``n`` under seed ``s``
is a pure function of ``(s, n, c, k)``.  Two policies evaluated on the same
seed therefore see identical outcomes wherever their decisions coincide,
and a scalar replay of a batched run reproduces it bit for bit.

Purity is achieved by deriving outcomes from a virtual uniform tape: step
``n`` reads cell ``(c, k)`` of a ``(chunk, C, K)`` uniform block generated
from ``SeedSequence([tag, seed, n // chunk])`` and compares it against the
success probability in force at ``n``.  Blocks are cached, so sequential
simulation touches each one once per seed.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import expit

from .model import DecisionPair, LinkModel, RateSet, compute_optima

__all__ = [
    "Environment",
    "OutcomeTape",
    "StationaryEnvironment",
    "SyntheticDriftSpec",
    "TraceEnvironment",
    "TraceTable",
    "accelerate",
    "drift_to_trace",
    "stationary_env",
    "synth_drift_env",
    "trace_env",
]

# Steps per uniform block.  Fixed forever: changing it changes every
# outcome stream, so it is part of the reproducibility contract.
_CHUNK = 512

# Domain tags keep outcome streams and drift paths statistically unrelated
# even when the user passes the same seed to both.
_OUTCOME_TAG = 0x9E3779B9
_DRIFT_TAG = 0x2545F491


@lru_cache(maxsize=64)
def _uniform_chunk(seed: int, block: int, channels: int, n_rates: int) -> np.ndarray:
    gen = np.random.default_rng(np.random.SeedSequence([_OUTCOME_TAG, seed, block]))
    u = gen.random((_CHUNK, channels, n_rates))
    u.setflags(write=False)
    return u


def _check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


class Environment:
    """Base class: a success-probability schedule plus a seeded outcome tape.

    Subclasses implement ``theta_at`` (effective success probabilities in
    force at a step) and may override ``theta_block`` with something faster
    than the stacking default.
    """

    def __init__(self, rates: RateSet, channels: int, horizon: int | None, seed: int):
        if channels < 1:
            raise ValueError("channels must be >= 1")
        if horizon is not None and horizon < 1:
            raise ValueError("horizon must be >= 1 when given")
        self._rates = rates
        self._channels = int(channels)
        self._horizon = None if horizon is None else int(horizon)
        self._seed = _check_seed(seed)

    @property
    def rates(self) -> RateSet:
        return self._rates

    @property
    def channels(self) -> int:
        return self._channels

    @property
    def n_rates(self) -> int:
        return len(self._rates)

    @property
    def horizon(self) -> int | None:
        """Number of valid steps, or None when the schedule never ends."""
        return self._horizon

    @property
    def seed(self) -> int:
        return self._seed

    def _check_step(self, step: int) -> int:
        step = int(step)
        if step < 0:
            raise ValueError(f"step must be >= 0, got {step}")
        if self._horizon is not None and step >= self._horizon:
            raise ValueError(f"step {step} beyond horizon {self._horizon}")
        return step

    def theta_at(self, step: int) -> np.ndarray:
        """Effective success probabilities, shape (channels, n_rates)."""
        raise NotImplementedError

    def theta_block(self, start: int, stop: int) -> np.ndarray:
        """Probabilities for steps [start, stop), shape (stop-start, C, K)."""
        self._check_step(start)
        if stop > start:
            self._check_step(stop - 1)
        return np.stack([self.theta_at(n) for n in range(start, stop)])

    def mu_at(self, step: int) -> np.ndarray:
        return self.theta_at(step) * self._rates.as_array()[None, :]

    def best_pair_at(self, step: int) -> DecisionPair:
        mu = self.mu_at(step)
        flat = int(np.argmax(mu))
        return DecisionPair(flat // self.n_rates + 1, flat % self.n_rates + 1)

    def mu_star_at(self, step: int) -> float:
        return float(self.mu_at(step).max())

    def draw(self, pair: DecisionPair, step: int) -> int:
        """Bernoulli outcome of playing ``pair`` at ``step`` (0 or 1)."""
        step = self._check_step(step)
        c, k = pair
        u = _uniform_chunk(self._seed, step // _CHUNK, self._channels, self.n_rates)
        th = self.theta_at(step)[c - 1, k - 1]
        return int(u[step % _CHUNK, c - 1, k - 1] < th)

    def with_seed(self, seed: int) -> "Environment":
        """Same probability schedule, different outcome stream."""
        clone = copy.copy(self)
        clone._seed = _check_seed(seed)
        return clone


class StationaryEnvironment(Environment):
    """Fixed success probabilities given by a link model."""

    def __init__(self, model: LinkModel, seed: int = 0):
        super().__init__(model.rates, model.channels, None, seed)
        self._model = model
        th = model.effective_theta().copy()
        th.setflags(write=False)
        self._theta = th
        opt = compute_optima(model)
        self._best = opt.best
        self._mu_star = opt.mu_star

    @property
    def model(self) -> LinkModel:
        return self._model

    def theta_at(self, step: int) -> np.ndarray:
        self._check_step(step)
        return self._theta

    def theta_block(self, start: int, stop: int) -> np.ndarray:
        self._check_step(start)
        return np.broadcast_to(self._theta, (stop - start, *self._theta.shape))

    def best_pair_at(self, step: int) -> DecisionPair:
        return self._best

    def mu_star_at(self, step: int) -> float:
        return self._mu_star


def stationary_env(model: LinkModel, seed: int = 0) -> StationaryEnvironment:
    return StationaryEnvironment(model, seed)


@dataclass(frozen=True)
class TraceTable:
    """Piecewise-constant success-probability schedule.

    ``starts`` are strictly increasing segment start steps beginning at 0;
    ``tables[i]`` holds the full (channels, n_rates) probabilities in force
    from ``starts[i]`` until the next start.  ``horizon`` bounds the valid
    step range when set.

    The CSV form has columns ``start_step, channel, rate_index, theta``,
    one row per cell; rows sharing a start form a segment, and cells a
    segment leaves unspecified inherit the previous segment's values.  The
    first segment must therefore specify every cell.
    """

    starts: tuple[int, ...]
    tables: tuple[np.ndarray, ...]
    horizon: int | None = None

    def __post_init__(self):
        if not self.starts:
            raise ValueError("trace needs at least one segment")
        if self.starts[0] != 0:
            raise ValueError("first segment must start at step 0")
        if any(b <= a for a, b in zip(self.starts, self.starts[1:])):
            raise ValueError("segment starts must be strictly increasing")
        if len(self.tables) != len(self.starts):
            raise ValueError("one probability table per segment required")
        shape = self.tables[0].shape
        for tab in self.tables:
            if tab.shape != shape or tab.ndim != 2:
                raise ValueError("all segment tables must share one (C, K) shape")
            if np.any(tab < 0.0) or np.any(tab > 1.0):
                raise ValueError("trace probabilities must lie in [0, 1]")
        if self.horizon is not None and self.horizon <= self.starts[-1]:
            raise ValueError("horizon must exceed the last segment start")
        for tab in self.tables:
            tab.setflags(write=False)

    @property
    def channels(self) -> int:
        return self.tables[0].shape[0]

    @property
    def n_rates(self) -> int:
        return self.tables[0].shape[1]

    def segment_index(self, step: int) -> int:
        if step < 0:
            raise ValueError(f"step must be >= 0, got {step}")
        return bisect_right(self.starts, step) - 1

    def theta_at(self, step: int) -> np.ndarray:
        return self.tables[self.segment_index(step)]

    def to_csv(self, path: str | Path) -> None:
        """Write the sparse CSV form: full first segment, then changed cells."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["start_step", "channel", "rate_index", "theta"])
            prev = None
            for start, tab in zip(self.starts, self.tables):
                for c in range(self.channels):
                    for k in range(self.n_rates):
                        if prev is not None and tab[c, k] == prev[c, k]:
                            continue
                        w.writerow([start, c + 1, k + 1, repr(float(tab[c, k]))])
                prev = tab

    @classmethod
    def from_csv(cls, path: str | Path, horizon: int | None = None) -> "TraceTable":
        rows: list[tuple[int, int, int, float]] = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"start_step", "channel", "rate_index", "theta"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"trace CSV must have columns {sorted(required)}")
            for row in reader:
                rows.append(
                    (
                        int(row["start_step"]),
                        int(row["channel"]),
                        int(row["rate_index"]),
                        float(row["theta"]),
                    )
                )
        if not rows:
            raise ValueError("trace CSV has no data rows")
        channels = max(r[1] for r in rows)
        n_rates = max(r[2] for r in rows)
        if min(r[1] for r in rows) < 1 or min(r[2] for r in rows) < 1:
            raise ValueError("channel and rate_index are 1-based")
        starts = sorted({r[0] for r in rows})
        by_start: dict[int, list[tuple[int, int, float]]] = {s: [] for s in starts}
        for s, c, k, th in rows:
            by_start[s].append((c, k, th))
        tables: list[np.ndarray] = []
        current = np.full((channels, n_rates), np.nan)
        for s in starts:
            current = current.copy()
            for c, k, th in by_start[s]:
                current[c - 1, k - 1] = th
            if np.any(np.isnan(current)):
                missing = np.argwhere(np.isnan(current))[0]
                raise ValueError(
                    f"first segment leaves channel {missing[0] + 1}, "
                    f"rate {missing[1] + 1} unspecified"
                )
            tables.append(current)
        return cls(starts=tuple(starts), tables=tuple(tables), horizon=horizon)


class TraceEnvironment(Environment):
    """Replays a trace table; steps at or past the horizon are rejected."""

    def __init__(self, trace: TraceTable, rates: RateSet, seed: int = 0):
        if len(rates) != trace.n_rates:
            raise ValueError(
                f"rate count {len(rates)} does not match trace width {trace.n_rates}"
            )
        super().__init__(rates, trace.channels, trace.horizon, seed)
        self._trace = trace
        self._mu_cache: dict[int, tuple[DecisionPair, float]] = {}

    @property
    def trace(self) -> TraceTable:
        return self._trace

    def theta_at(self, step: int) -> np.ndarray:
        return self._trace.theta_at(self._check_step(step))

    def theta_block(self, start: int, stop: int) -> np.ndarray:
        self._check_step(start)
        if stop > start:
            self._check_step(stop - 1)
        out = np.empty((stop - start, self.channels, self.n_rates))
        for n in range(start, stop):
            out[n - start] = self._trace.theta_at(n)
        return out

    def _segment_optimum(self, seg: int) -> tuple[DecisionPair, float]:
        hit = self._mu_cache.get(seg)
        if hit is None:
            mu = self._trace.tables[seg] * self._rates.as_array()[None, :]
            flat = int(np.argmax(mu))
            hit = (
                DecisionPair(flat // self.n_rates + 1, flat % self.n_rates + 1),
                float(mu.reshape(-1)[flat]),
            )
            self._mu_cache[seg] = hit
        return hit

    def best_pair_at(self, step: int) -> DecisionPair:
        return self._segment_optimum(self._trace.segment_index(self._check_step(step)))[0]

    def mu_star_at(self, step: int) -> float:
        return self._segment_optimum(self._trace.segment_index(self._check_step(step)))[1]


def trace_env(trace: TraceTable, rates: RateSet, seed: int = 0) -> TraceEnvironment:
    return TraceEnvironment(trace, rates, seed)


def accelerate(trace: TraceTable, factor: int) -> TraceTable:
    """Compress a trace in time: starts and horizon divide by ``factor``.

    Segments whose starts collide after division are merged with the latest
    one winning, matching what a simulator skipping steps would observe.  A
    horizon that would shrink to zero is clamped to one step so the result
    stays a valid single-segment trace.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    merged: dict[int, np.ndarray] = {}
    for start, tab in zip(trace.starts, trace.tables):
        merged[start // factor] = tab
    starts = tuple(sorted(merged))
    horizon = trace.horizon
    if horizon is not None:
        horizon = max(1, horizon // factor)
        # Segments pushed past the compressed horizon never activate.
        for s in starts:
            if s >= horizon:
                del merged[s]
        starts = tuple(s for s in starts if s < horizon)
    return TraceTable(
        starts=starts,
        tables=tuple(merged[s] for s in starts),
        horizon=horizon,
    )


@dataclass(frozen=True)
class SyntheticDriftSpec:
    """Parameters for a smoothly drifting channel-quality process.

    Each channel carries a latent quality performing a reflected Gaussian
    random walk in ``[latent_lo, latent_hi]``; channel ``c`` starts at the
    ``(c - 1/2)/C`` quantile of the range so channels begin evenly spread.
    Success probabilities come from squashing the latent against a strictly
    increasing per-rate threshold ladder, which keeps every row of the
    probability table nonincreasing in the rate index at every step.  A
    ``step_std`` of zero freezes the walk, recovering a stationary model.
    """

    rates: RateSet
    channels: int
    horizon: int
    step_std: float
    softness: float = 0.08
    latent_lo: float = 0.0
    latent_hi: float = 1.0
    thresholds: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.step_std < 0.0:
            raise ValueError("step_std must be >= 0")
        if self.softness <= 0.0:
            raise ValueError("softness must be > 0")
        if not self.latent_hi > self.latent_lo:
            raise ValueError("latent_hi must exceed latent_lo")
        _check_seed(self.seed)
        if self.thresholds is not None:
            if len(self.thresholds) != len(self.rates):
                raise ValueError("need one threshold per rate")
            if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
                raise ValueError("thresholds must be strictly increasing")

    def threshold_array(self) -> np.ndarray:
        if self.thresholds is not None:
            return np.asarray(self.thresholds, dtype=float)
        K = len(self.rates)
        span = self.latent_hi - self.latent_lo
        return self.latent_lo + span * (np.arange(1, K + 1) / (K + 1))

    def to_json_dict(self) -> dict:
        return {
            "rates": list(self.rates.as_array()),
            "channels": self.channels,
            "horizon": self.horizon,
            "step_std": self.step_std,
            "softness": self.softness,
            "latent_lo": self.latent_lo,
            "latent_hi": self.latent_hi,
            "thresholds": None if self.thresholds is None else list(self.thresholds),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SyntheticDriftSpec":
        known = {
            "rates",
            "channels",
            "horizon",
            "step_std",
            "softness",
            "latent_lo",
            "latent_hi",
            "thresholds",
            "seed",
        }
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown drift spec keys: {sorted(extra)}")
        kwargs = dict(data)
        kwargs["rates"] = RateSet.of(kwargs["rates"])
        if kwargs.get("thresholds") is not None:
            kwargs["thresholds"] = tuple(kwargs["thresholds"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticDriftSpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _reflect(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    span = hi - lo
    y = np.mod(x - lo, 2.0 * span)
    return lo + np.where(y > span, 2.0 * span - y, y)


class DriftEnvironment(Environment):
    """Synthetic drift: latent walks precomputed at construction."""

    def __init__(self, spec: SyntheticDriftSpec, seed: int | None = None):
        super().__init__(
            spec.rates, spec.channels, spec.horizon, spec.seed if seed is None else seed
        )
        self._spec = spec
        span = spec.latent_hi - spec.latent_lo
        start = spec.latent_lo + span * (np.arange(spec.channels) + 0.5) / spec.channels
        if spec.step_std > 0.0:
            gen = np.random.default_rng(np.random.SeedSequence([_DRIFT_TAG, spec.seed]))
            steps = gen.normal(0.0, spec.step_std, size=(spec.horizon, spec.channels))
            steps[0] = 0.0
            raw = start[None, :] + np.cumsum(steps, axis=0)
            self._latent = _reflect(raw, spec.latent_lo, spec.latent_hi)
        else:
            self._latent = np.broadcast_to(start, (spec.horizon, spec.channels))
        self._thresholds = spec.threshold_array()

    @property
    def spec(self) -> SyntheticDriftSpec:
        return self._spec

    def latent_at(self, step: int) -> np.ndarray:
        return self._latent[self._check_step(step)].copy()

    def theta_at(self, step: int) -> np.ndarray:
        step = self._check_step(step)
        z = self._latent[step][:, None] - self._thresholds[None, :]
        return expit(z / self._spec.softness)

    def theta_block(self, start: int, stop: int) -> np.ndarray:
        self._check_step(start)
        if stop > start:
            self._check_step(stop - 1)
        z = self._latent[start:stop, :, None] - self._thresholds[None, None, :]
        return expit(z / self._spec.softness)


def synth_drift_env(spec: SyntheticDriftSpec) -> DriftEnvironment:
    return DriftEnvironment(spec)


def drift_to_trace(spec: SyntheticDriftSpec, sample_every: int = 1) -> TraceTable:
    """Freeze a drift process into a piecewise-constant trace.

    Probabilities are sampled every ``sample_every`` steps and held until
    the next sample, so ``sample_every=1`` reproduces the process exactly.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    env = DriftEnvironment(spec)
    starts = tuple(range(0, spec.horizon, sample_every))
    tables = tuple(env.theta_at(s) for s in starts)
    return TraceTable(starts=starts, tables=tables, horizon=spec.horizon)


class OutcomeTape:
    """Materializes outcome blocks for many seeds over one environment.

    ``block(start, stop)`` returns a ``(seeds, stop-start, C, K)`` uint8
    array whose entries match ``env.with_seed(s).draw(pair, n)`` exactly;
    batched runs and scalar replays therefore agree bit for bit.
    """

    def __init__(self, env: Environment, seeds: tuple[int, ...] | list[int]):
        seeds = tuple(_check_seed(s) for s in seeds)
        if not seeds:
            raise ValueError("at least one seed required")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        self._env = env
        self._seeds = seeds

    @property
    def seeds(self) -> tuple[int, ...]:
        return self._seeds

    @property
    def env(self) -> Environment:
        return self._env

    def block(self, start: int, stop: int) -> np.ndarray:
        if stop <= start:
            raise ValueError("stop must exceed start")
        th = np.ascontiguousarray(self._env.theta_block(start, stop))
        C, K = self._env.channels, self._env.n_rates
        out = np.empty((len(self._seeds), stop - start, C, K), dtype=np.uint8)
        b_lo, b_hi = start // _CHUNK, (stop - 1) // _CHUNK
        for si, seed in enumerate(self._seeds):
            pos = 0
            for b in range(b_lo, b_hi + 1):
                u = _uniform_chunk(seed, b, C, K)
                lo = max(start, b * _CHUNK)
                hi = min(stop, (b + 1) * _CHUNK)
                seg = slice(lo - b * _CHUNK, hi - b * _CHUNK)
                np.less(
                    u[seg], th[pos : pos + hi - lo], out=out[si, pos : pos + hi - lo]
                )
                pos += hi - lo
        return out
