"""Experiment harness: batched simulation, dual accounting, file outputs.

A run evaluates each configured policy on the same environment under common
random numbers (one replication lane per seed, all lanes advanced in lock
step).  Regret is tracked two ways:

* slot accounting: every transmission costs one slot; the pseudo-regret
  trajectory ``sum(mu_star(n) - mu_chosen(n))`` is sampled at checkpoints.
* time accounting: a packet at rate ``r`` occupies ``1/r`` time units and a
  run has a fixed time budget; a lane's packet ledger freezes at the first
  packet that no longer fits.  The reported time-system regret compares the
  expected throughput of always playing the best pair against the expected
  throughput of the packets actually sent.

Both views come from a single simulation: lanes share one decision sequence
(identical histories imply identical decisions), so the time system is just
extra bookkeeping on the slot system.  The budget test uses one canonical
reduction, ``counts @ (1 / rates) <= budget``, applied identically during
the run and in any later audit, making the budget invariant exact.

Outputs are byte-deterministic: no timestamps, sorted JSON keys, floats
rendered with ``repr`` (shortest round-trip form).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import compute_bound_report
from .environments import (
    Environment,
    OutcomeTape,
    SyntheticDriftSpec,
    TraceTable,
    stationary_env,
    synth_drift_env,
    trace_env,
)
from .model import (
    DecisionPair,
    LinkModel,
    RateSet,
    compute_optima,
    flat_to_pair,
    load_theta_csv,
    pair_to_flat,
)
from .policies import build_policy

__all__ = [
    "AccountingReport",
    "ExperimentConfig",
    "ExperimentResult",
    "PolicyAccounting",
    "PolicyRunResult",
    "PolicySpec",
    "accounting_check",
    "default_checkpoints",
    "emit_outputs",
    "run_experiment",
]

_BLOCK = 512

LEARNING_KINDS = ("kl-ucb", "crs-t", "kl-ucb-u")
BASELINE_KINDS = ("oracle", "static")


@dataclass(frozen=True)
class PolicySpec:
    """One policy to evaluate: a kind plus its variant knobs."""

    kind: str
    window: int | None = None
    strict: bool = False

    def __post_init__(self):
        kind = self.kind.strip().lower()
        object.__setattr__(self, "kind", kind)
        if kind not in LEARNING_KINDS + BASELINE_KINDS:
            raise ValueError(
                f"unknown policy kind {self.kind!r}; expected one of "
                f"{sorted(LEARNING_KINDS + BASELINE_KINDS)}"
            )
        if self.window is not None:
            if kind in BASELINE_KINDS:
                raise ValueError(f"{kind} takes no window")
            if self.window < 1:
                raise ValueError("window must be >= 1")
        if self.strict and kind != "kl-ucb-u":
            raise ValueError("strict applies only to kl-ucb-u")

    @property
    def label(self) -> str:
        parts = [self.kind]
        if self.window is not None:
            parts.append(f"w{self.window}")
        if self.strict:
            parts.append("strict")
        return "-".join(parts)

    @property
    def is_baseline(self) -> bool:
        return self.kind in BASELINE_KINDS

    def to_json_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.window is not None:
            out["window"] = self.window
        if self.strict:
            out["strict"] = True
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "PolicySpec":
        extra = set(data) - {"kind", "window", "strict"}
        if extra:
            raise ValueError(f"unknown policy keys: {sorted(extra)}")
        if "kind" not in data:
            raise ValueError("policy entry needs a 'kind'")
        return cls(
            kind=data["kind"],
            window=data.get("window"),
            strict=bool(data.get("strict", False)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one experiment.

    Exactly one probability source must be set: an inline ``theta`` table
    (optionally occupancy-scaled), a ``trace``, or a ``drift`` spec.  Under
    ``accounting`` "original" or "both", ``horizon`` is the time budget and
    the source must be stationary; otherwise it is the slot count.
    """

    rates: RateSet
    policies: tuple[PolicySpec, ...]
    horizon: int
    seeds: tuple[int, ...]
    theta: np.ndarray | None = None
    occupancy: np.ndarray | None = None
    trace: TraceTable | None = None
    drift: SyntheticDriftSpec | None = None
    accounting: str = "alternative"
    checkpoints: tuple[int, ...] = ()
    out_dir: str = "results"

    def __post_init__(self):
        sources = [s is not None for s in (self.theta, self.trace, self.drift)]
        if sum(sources) != 1:
            raise ValueError("exactly one of theta, trace, drift must be given")
        if self.occupancy is not None and self.theta is None:
            raise ValueError("occupancy only applies to an inline theta table")
        if self.theta is not None:
            th = np.asarray(self.theta, dtype=float)
            object.__setattr__(self, "theta", th)
            occ = self.occupancy
            if occ is not None:
                occ = np.asarray(occ, dtype=float)
                object.__setattr__(self, "occupancy", occ)
            LinkModel(self.rates, th, occ)  # validates shapes and ranges
        if self.trace is not None and self.trace.n_rates != len(self.rates):
            raise ValueError("trace rate count does not match the rate set")
        if self.drift is not None and self.drift.rates.values != self.rates.values:
            raise ValueError("drift spec rates must equal the experiment rates")
        if not self.policies:
            raise ValueError("at least one policy required")
        object.__setattr__(self, "policies", tuple(self.policies))
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate policy labels: {labels}")
        if self.horizon < self.channels * len(self.rates):
            raise ValueError(
                f"horizon {self.horizon} below the pair count "
                f"{self.channels * len(self.rates)}"
            )
        seeds = tuple(int(s) for s in self.seeds)
        object.__setattr__(self, "seeds", seeds)
        if not seeds:
            raise ValueError("at least one seed required")
        if any(s < 0 for s in seeds):
            raise ValueError("seeds must be nonnegative")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        if self.accounting not in ("alternative", "original", "both"):
            raise ValueError(
                f"accounting must be alternative, original or both, got {self.accounting!r}"
            )
        if self.accounting != "alternative" and self.theta is None:
            raise ValueError("time accounting requires a stationary theta table")
        cps = tuple(int(c) for c in self.checkpoints)
        object.__setattr__(self, "checkpoints", cps)
        if any(c < 1 for c in cps):
            raise ValueError("checkpoints must be >= 1")
        if self.drift is not None and self.horizon > self.drift.horizon:
            raise ValueError("horizon exceeds the drift spec horizon")
        if (
            self.trace is not None
            and self.trace.horizon is not None
            and self.horizon > self.trace.horizon
        ):
            raise ValueError("horizon exceeds the trace horizon")

    @property
    def channels(self) -> int:
        if self.theta is not None:
            return self.theta.shape[0]
        if self.trace is not None:
            return self.trace.channels
        return self.drift.channels

    @property
    def n_rates(self) -> int:
        return len(self.rates)

    def model(self) -> LinkModel | None:
        """Stationary link model, or None for trace/drift sources."""
        if self.theta is None:
            return None
        return LinkModel(self.rates, self.theta, self.occupancy)

    def build_environment(self, seed: int = 0) -> Environment:
        if self.theta is not None:
            return stationary_env(self.model(), seed)
        if self.trace is not None:
            return trace_env(self.trace, self.rates, seed)
        return synth_drift_env(self.drift).with_seed(seed)

    def to_json_dict(self) -> dict:
        out: dict = {
            "rates": [float(r) for r in self.rates],
            "policies": [p.to_json_dict() for p in self.policies],
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "accounting": self.accounting,
            "out_dir": self.out_dir,
        }
        if self.checkpoints:
            out["checkpoints"] = list(self.checkpoints)
        if self.theta is not None:
            out["theta"] = [[float(v) for v in row] for row in self.theta]
            if self.occupancy is not None:
                out["occupancy"] = [float(v) for v in self.occupancy]
        elif self.trace is not None:
            out["trace"] = {
                "starts": list(self.trace.starts),
                "horizon": self.trace.horizon,
                "tables": [
                    [[float(v) for v in row] for row in tab] for tab in self.trace.tables
                ],
            }
        else:
            out["synth"] = self.drift.to_json_dict()
        return out

    @classmethod
    def from_json_dict(cls, data: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        known = {
            "rates",
            "theta",
            "theta_csv",
            "trace_csv",
            "synth",
            "occupancy",
            "policies",
            "horizon",
            "seeds",
            "accounting",
            "checkpoints",
            "out_dir",
        }
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        for key in ("rates", "policies", "horizon", "seeds"):
            if key not in data:
                raise ValueError(f"config missing required key {key!r}")
        base = Path(base_dir) if base_dir is not None else Path(".")

        def resolve(p: str) -> Path:
            path = Path(p)
            return path if path.is_absolute() else base / path

        rates = RateSet.of(data["rates"])
        sources = [k for k in ("theta", "theta_csv", "trace_csv", "synth") if k in data]
        if len(sources) != 1:
            raise ValueError(
                f"exactly one of theta, theta_csv, trace_csv, synth required, got {sources}"
            )
        theta = trace = drift = None
        if "theta" in data:
            theta = np.asarray(data["theta"], dtype=float)
        elif "theta_csv" in data:
            theta = load_theta_csv(resolve(data["theta_csv"]))
        elif "trace_csv" in data:
            trace = TraceTable.from_csv(resolve(data["trace_csv"]), horizon=data["horizon"])
        else:
            synth = dict(data["synth"])
            synth.setdefault("rates", list(data["rates"]))
            synth.setdefault("horizon", data["horizon"])
            drift = SyntheticDriftSpec.from_json_dict(synth)
        seeds = data["seeds"]
        if isinstance(seeds, int):
            seeds = list(range(1, seeds + 1))
        occupancy = data.get("occupancy")
        return cls(
            rates=rates,
            policies=tuple(PolicySpec.from_json_dict(p) for p in data["policies"]),
            horizon=int(data["horizon"]),
            seeds=tuple(seeds),
            theta=theta,
            occupancy=None if occupancy is None else np.asarray(occupancy, dtype=float),
            trace=trace,
            drift=drift,
            accounting=data.get("accounting", "alternative"),
            checkpoints=tuple(data.get("checkpoints", ())),
            out_dir=data.get("out_dir", "results"),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        with path.open() as fh:
            data = json.load(fh)
        return cls.from_json_dict(data, base_dir=path.parent)

    def with_seeds(self, n: int) -> "ExperimentConfig":
        """Replace the seed list with 1..n (CLI --seeds override)."""
        if n < 1:
            raise ValueError("need at least one seed")
        return dataclasses.replace(self, seeds=tuple(range(1, n + 1)))


def default_checkpoints(slots: int) -> tuple[int, ...]:
    """Powers of two up to the horizon, plus the horizon itself."""
    cps = set()
    p = 1
    while p <= slots:
        cps.add(p)
        p *= 2
    cps.add(slots)
    return tuple(sorted(cps))


@dataclass(frozen=True)
class PolicyRunResult:
    """Per-policy simulation output across all replication lanes."""

    spec: PolicySpec
    label: str
    checkpoints: tuple[int, ...]
    trajectories: np.ndarray = field(repr=False)
    pulls: np.ndarray = field(repr=False)
    expected_reward: np.ndarray = field(repr=False)
    realized_reward: np.ndarray = field(repr=False)
    decisions: np.ndarray = field(repr=False)
    packet_counts: np.ndarray | None = field(default=None, repr=False)
    time_used: np.ndarray | None = field(default=None, repr=False)
    time_regret: np.ndarray | None = field(default=None, repr=False)

    @property
    def mean_regret(self) -> np.ndarray:
        return self.trajectories.mean(axis=0)

    @property
    def stddev_regret(self) -> np.ndarray:
        if self.trajectories.shape[0] < 2:
            return np.zeros(self.trajectories.shape[1])
        return self.trajectories.std(axis=0, ddof=1)

    @property
    def final_regret(self) -> np.ndarray:
        return self.trajectories[:, -1]

    def regret_at(self, checkpoint: int) -> np.ndarray:
        try:
            col = self.checkpoints.index(checkpoint)
        except ValueError:
            raise KeyError(f"no checkpoint {checkpoint}; have {self.checkpoints}") from None
        return self.trajectories[:, col]


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    slots: int
    time_horizon: float | None
    checkpoints: tuple[int, ...]
    policies: tuple[PolicyRunResult, ...]
    oracle_reward: float
    static_reward: float
    static_flat: int
    best_flats: np.ndarray = field(repr=False)

    def policy(self, label: str) -> PolicyRunResult:
        for p in self.policies:
            if p.label == label:
                return p
        raise KeyError(f"no policy {label!r}; have {[p.label for p in self.policies]}")

    @property
    def static_pair(self) -> DecisionPair:
        return flat_to_pair(self.static_flat, self.config.n_rates)

    def efficiency(self, label: str) -> np.ndarray:
        """Per-lane expected reward as a fraction of the oracle's."""
        return self.policy(label).expected_reward / self.oracle_reward


def _resolve_slots(config: ExperimentConfig) -> tuple[int, float | None]:
    if config.accounting == "alternative":
        return config.horizon, None
    t_budget = float(config.horizon)
    return int(math.ceil(t_budget * config.rates.values[-1])), t_budget


def _checkpoint_grid(config: ExperimentConfig, slots: int, time_horizon: float | None) -> tuple[int, ...]:
    cps = set(default_checkpoints(slots))
    cps.update(c for c in config.checkpoints if c <= slots)
    if time_horizon is not None:
        cps.add(max(1, int(math.floor(time_horizon * config.rates.values[0]))))
    return tuple(sorted(cps))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    env = config.build_environment()
    S = len(config.seeds)
    C, K = config.channels, config.n_rates
    P = C * K
    r = config.rates.as_array()
    r_flat = np.tile(r, C)
    inv_r = 1.0 / r_flat
    slots, time_horizon = _resolve_slots(config)
    checkpoints = _checkpoint_grid(config, slots, time_horizon)
    cp_col = {cp: i for i, cp in enumerate(checkpoints)}
    lanes = np.arange(S)
    tape = OutcomeTape(env, config.seeds)

    # Prepass over the schedule: oracle total, per-pair totals, best pair
    # per step (reused for the oracle baseline and the decision log).
    oracle_reward = 0.0
    mu_totals = np.zeros(P)
    best_flats = np.empty(slots, dtype=np.int64)
    for n0 in range(0, slots, _BLOCK):
        n1 = min(n0 + _BLOCK, slots)
        mu_b = env.theta_block(n0, n1).reshape(n1 - n0, P) * r_flat
        oracle_reward += float(mu_b.max(axis=1).sum())
        mu_totals += mu_b.sum(axis=0)
        best_flats[n0:n1] = np.argmax(mu_b, axis=1)
    static_flat = int(np.argmax(mu_totals))
    static_reward = float(mu_totals[static_flat])

    if time_horizon is not None:
        model = config.model()
        opt = compute_optima(model)
        th_flat = model.effective_theta().reshape(-1)
        best_pair_flat = pair_to_flat(opt.best, K)
        time_benchmark = th_flat[best_pair_flat] * math.floor(
            config.rates.rate(opt.best.rate_index) * time_horizon
        )

    results: list[PolicyRunResult] = []
    for spec in config.policies:
        policy = None
        if not spec.is_baseline:
            policy = build_policy(
                spec.kind, config.rates, C, window=spec.window, batch=S, strict=spec.strict
            )
        pseudo = np.zeros(S)
        expected = np.zeros(S)
        realized = np.zeros(S)
        pulls = np.zeros((S, P), dtype=np.int64)
        traj = np.empty((S, len(checkpoints)))
        decisions = np.empty(slots, dtype=np.int64)
        if time_horizon is not None:
            s_counts = np.zeros((S, P), dtype=np.int64)
            frozen = np.zeros(S, dtype=bool)

        for n0 in range(0, slots, _BLOCK):
            n1 = min(n0 + _BLOCK, slots)
            B = n1 - n0
            mu_b = env.theta_block(n0, n1).reshape(B, P) * r_flat
            mu_star_b = mu_b.max(axis=1)
            outs = tape.block(n0, n1).reshape(S, B, P)
            for i in range(B):
                n = n0 + i
                if policy is not None:
                    flats = policy.select_batch()
                elif spec.kind == "oracle":
                    flats = np.full(S, best_flats[n], dtype=np.int64)
                else:
                    flats = np.full(S, static_flat, dtype=np.int64)
                o = outs[lanes, i, flats]
                if policy is not None:
                    policy.update_batch(flats, o.astype(np.int64))
                mu_n = mu_b[i]
                pseudo += mu_star_b[i] - mu_n[flats]
                expected += mu_n[flats]
                realized += o * r_flat[flats]
                pulls[lanes, flats] += 1
                decisions[n] = flats[0]
                if time_horizon is not None and not frozen.all():
                    act = np.flatnonzero(~frozen)
                    fl = flats[act]
                    s_counts[act, fl] += 1
                    over = s_counts[act] @ inv_r > time_horizon
                    if over.any():
                        s_counts[act[over], fl[over]] -= 1
                        frozen[act[over]] = True
                col = cp_col.get(n + 1)
                if col is not None:
                    traj[:, col] = pseudo

        kwargs = {}
        if time_horizon is not None:
            kwargs = {
                "packet_counts": s_counts,
                "time_used": s_counts @ inv_r,
                "time_regret": time_benchmark - s_counts @ th_flat,
            }
        results.append(
            PolicyRunResult(
                spec=spec,
                label=spec.label,
                checkpoints=checkpoints,
                trajectories=traj,
                pulls=pulls,
                expected_reward=expected,
                realized_reward=realized,
                decisions=decisions,
                **kwargs,
            )
        )

    return ExperimentResult(
        config=config,
        slots=slots,
        time_horizon=time_horizon,
        checkpoints=checkpoints,
        policies=tuple(results),
        oracle_reward=oracle_reward,
        static_reward=static_reward,
        static_flat=static_flat,
        best_flats=best_flats,
    )


@dataclass(frozen=True)
class PolicyAccounting:
    """Sandwich and budget verdicts for one policy."""

    label: str
    mean_slot_low: float
    mean_time: float
    mean_slot_high: float
    tol_low: float
    tol_high: float
    lower_ok: bool
    upper_ok: bool
    budget_ok: bool
    max_time_used: float

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.budget_ok

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "mean_slot_regret_low": self.mean_slot_low,
            "mean_time_regret": self.mean_time,
            "mean_slot_regret_high": self.mean_slot_high,
            "tolerance_low": self.tol_low,
            "tolerance_high": self.tol_high,
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "budget_ok": self.budget_ok,
            "max_time_used": self.max_time_used,
        }


@dataclass(frozen=True)
class AccountingReport:
    time_horizon: float
    slot_low: int
    slot_high: int
    entries: tuple[PolicyAccounting, ...]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def to_json_dict(self) -> dict:
        return {
            "time_horizon": self.time_horizon,
            "slot_low": self.slot_low,
            "slot_high": self.slot_high,
            "ok": self.ok,
            "policies": [e.to_json_dict() for e in self.entries],
        }


def _se(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    return float(x.std(ddof=1) / math.sqrt(len(x)))


def accounting_check(result: ExperimentResult, rates: RateSet | None = None) -> AccountingReport:
    """Verify the slot/time regret sandwich and the exact budget invariant.

    The mean time-system regret must sit between the mean slot-system
    regrets at ``floor(T * r_min)`` and ``ceil(T * r_max)`` slots, up to
    three combined standard errors; and every lane's packet ledger must
    satisfy ``counts @ (1 / rates) <= T`` under the canonical reduction.
    """
    if result.time_horizon is None:
        raise ValueError("accounting_check needs a run with time accounting enabled")
    rates = result.config.rates if rates is None else rates
    if rates.values != result.config.rates.values:
        raise ValueError("rates disagree with the experiment's rate set")
    t_budget = result.time_horizon
    slot_low = max(1, int(math.floor(t_budget * rates.values[0])))
    slot_high = int(math.ceil(t_budget * rates.values[-1]))
    inv_r = 1.0 / np.tile(rates.as_array(), result.config.channels)
    entries = []
    for pol in result.policies:
        if pol.time_regret is None:
            continue
        r_lo = pol.regret_at(slot_low)
        r_hi = pol.regret_at(slot_high)
        r_time = pol.time_regret
        tol_low = 3.0 * math.hypot(_se(r_lo), _se(r_time))
        tol_high = 3.0 * math.hypot(_se(r_hi), _se(r_time))
        time_used = pol.packet_counts @ inv_r
        entries.append(
            PolicyAccounting(
                label=pol.label,
                mean_slot_low=float(r_lo.mean()),
                mean_time=float(r_time.mean()),
                mean_slot_high=float(r_hi.mean()),
                tol_low=tol_low,
                tol_high=tol_high,
                lower_ok=bool(r_lo.mean() <= r_time.mean() + tol_low),
                upper_ok=bool(r_time.mean() <= r_hi.mean() + tol_high),
                budget_ok=bool(np.all(time_used <= t_budget)),
                max_time_used=float(time_used.max()),
            )
        )
    return AccountingReport(
        time_horizon=t_budget, slot_low=slot_low, slot_high=slot_high, entries=tuple(entries)
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_outputs(result: ExperimentResult, out_dir: str | Path | None = None) -> dict[str, Path]:
    """Write regret.csv, decisions.csv, summary.json and, when the source
    is stationary, bounds.json.  Returns the paths keyed by artifact name.

    regret.csv: one row per (policy, checkpoint), columns ``checkpoint,
    policy, mean, stddev, seed_<id>...`` with per-seed trajectory values.
    decisions.csv: lane-0 decision log, ``step, policy, channel,
    rate_index, best_channel, best_rate_index``.
    """
    out = Path(out_dir if out_dir is not None else result.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    config = result.config
    K = config.n_rates

    regret_path = out / "regret.csv"
    with regret_path.open("w", newline="") as fh:
        header = ["checkpoint", "policy", "mean", "stddev"]
        header += [f"seed_{s}" for s in config.seeds]
        fh.write(",".join(header) + "\n")
        for pol in sorted(result.policies, key=lambda p: p.label):
            means = pol.mean_regret
            stds = pol.stddev_regret
            for i, cp in enumerate(result.checkpoints):
                row = [str(cp), pol.label, _fmt(means[i]), _fmt(stds[i])]
                row += [_fmt(v) for v in pol.trajectories[:, i]]
                fh.write(",".join(row) + "\n")
    paths["regret"] = regret_path

    dec_path = out / "decisions.csv"
    with dec_path.open("w", newline="") as fh:
        fh.write("step,policy,channel,rate_index,best_channel,best_rate_index\n")
        for pol in sorted(result.policies, key=lambda p: p.label):
            for n in range(result.slots):
                c, k = flat_to_pair(int(pol.decisions[n]), K)
                bc, bk = flat_to_pair(int(result.best_flats[n]), K)
                fh.write(f"{n},{pol.label},{c},{k},{bc},{bk}\n")
    paths["decisions"] = dec_path

    summary: dict = {
        "config": config.to_json_dict(),
        "slots": result.slots,
        "checkpoints": list(result.checkpoints),
        "oracle": {"expected_reward": result.oracle_reward, "efficiency": 1.0},
        "static": {
            "pair": [result.static_pair.channel, result.static_pair.rate_index],
            "expected_reward": result.static_reward,
            "efficiency": result.static_reward / result.oracle_reward,
        },
        "policies": {},
    }
    if result.time_horizon is not None:
        summary["time_horizon"] = result.time_horizon
        summary["accounting"] = accounting_check(result).to_json_dict()
    for pol in result.policies:
        eff = pol.expected_reward / result.oracle_reward
        entry = {
            "final_regret_mean": float(pol.final_regret.mean()),
            "final_regret_stddev": float(np.std(pol.final_regret, ddof=1))
            if len(pol.final_regret) > 1
            else 0.0,
            "efficiency_mean": float(eff.mean()),
            "expected_reward_mean": float(pol.expected_reward.mean()),
            "realized_reward_mean": float(pol.realized_reward.mean()),
        }
        if pol.time_regret is not None:
            entry["time_regret_mean"] = float(pol.time_regret.mean())
            entry["max_time_used"] = float((pol.packet_counts @ (1.0 / np.tile(config.rates.as_array(), config.channels))).max())
        summary["policies"][pol.label] = entry
    sum_path = out / "summary.json"
    with sum_path.open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["summary"] = sum_path

    model = config.model()
    if model is not None:
        bounds_path = out / "bounds.json"
        with bounds_path.open("w") as fh:
            json.dump(compute_bound_report(model).to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths["bounds"] = bounds_path
    return paths
