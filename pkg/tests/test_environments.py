"""Environment tests: schedules, outcome purity, traces, drift, tapes."""

from __future__ import annotations

import numpy as np
import pytest

from chanrate import (
    LinkModel,
    OutcomeTape,
    RateSet,
    StationaryEnvironment,
    SyntheticDriftSpec,
    TraceTable,
    accelerate,
    drift_to_trace,
    stationary_env,
    synth_drift_env,
    trace_env,
)


@pytest.fixture()
def swap_trace():
    # Two segments; the better channel flips at step 100.
    t0 = np.array([[0.9, 0.2], [0.4, 0.1]])
    t1 = np.array([[0.2, 0.1], [0.9, 0.3]])
    return TraceTable(starts=(0, 100), tables=(t0, t1), horizon=200)


class TestStationary:
    def test_schedule_is_constant(self, tiny_model):
        env = stationary_env(tiny_model, seed=5)
        np.testing.assert_array_equal(env.theta_at(0), env.theta_at(999))
        assert env.horizon is None
        assert env.best_pair_at(123) == (1, 2)
        assert env.mu_star_at(0) == 1.2

    def test_theta_block_broadcasts(self, tiny_model):
        env = stationary_env(tiny_model)
        block = env.theta_block(10, 20)
        assert block.shape == (10, 2, 2)
        np.testing.assert_array_equal(block[3], tiny_model.theta)

    def test_occupancy_feeds_through(self):
        model = LinkModel(
            RateSet.of([1.0]), np.array([[0.8], [0.8]]), occupancy=np.array([0.5, 0.0])
        )
        env = stationary_env(model)
        np.testing.assert_allclose(env.theta_at(0), [[0.4], [0.8]])
        assert env.best_pair_at(0) == (2, 1)

    def test_draw_is_pure(self, tiny_model):
        env = stationary_env(tiny_model, seed=3)
        first = [env.draw((1, 1), n) for n in range(100)]
        second = [env.draw((1, 1), n) for n in range(100)]
        assert first == second

    def test_draw_mean_tracks_probability(self, tiny_model):
        env = stationary_env(tiny_model, seed=70)
        n = 4096
        mean = sum(env.draw((2, 1), i) for i in range(n)) / n
        # theta = 0.5; a 6-sigma band at this sample size is +-0.047.
        assert abs(mean - 0.5) < 0.05

    def test_with_seed_changes_outcomes_not_schedule(self, tiny_model):
        a = stationary_env(tiny_model, seed=1)
        b = a.with_seed(2)
        assert b.seed == 2 and a.seed == 1
        np.testing.assert_array_equal(a.theta_at(0), b.theta_at(0))
        draws_a = [a.draw((1, 1), n) for n in range(200)]
        draws_b = [b.draw((1, 1), n) for n in range(200)]
        assert draws_a != draws_b

    def test_seed_validation(self, tiny_model):
        with pytest.raises(ValueError, match="seed"):
            stationary_env(tiny_model, seed=-1)
        with pytest.raises(ValueError, match="seed"):
            stationary_env(tiny_model, seed=True)


class TestTraceTable:
    def test_validation(self):
        tab = np.full((1, 2), 0.5)
        with pytest.raises(ValueError, match="start at step 0"):
            TraceTable(starts=(5,), tables=(tab,))
        with pytest.raises(ValueError, match="strictly increasing"):
            TraceTable(starts=(0, 0), tables=(tab, tab))
        with pytest.raises(ValueError, match="one probability table"):
            TraceTable(starts=(0, 1), tables=(tab,))
        with pytest.raises(ValueError, match="share one"):
            TraceTable(starts=(0, 1), tables=(tab, np.full((2, 2), 0.5)))
        with pytest.raises(ValueError, match="exceed the last segment"):
            TraceTable(starts=(0, 10), tables=(tab, tab), horizon=10)

    def test_segment_lookup(self, swap_trace):
        assert swap_trace.segment_index(0) == 0
        assert swap_trace.segment_index(99) == 0
        assert swap_trace.segment_index(100) == 1
        assert swap_trace.theta_at(99)[0, 0] == 0.9
        assert swap_trace.theta_at(100)[0, 0] == 0.2

    def test_csv_round_trip(self, swap_trace, tmp_path):
        path = tmp_path / "trace.csv"
        swap_trace.to_csv(path)
        loaded = TraceTable.from_csv(path, horizon=200)
        assert loaded.starts == swap_trace.starts
        assert loaded.horizon == 200
        for a, b in zip(loaded.tables, swap_trace.tables):
            np.testing.assert_array_equal(a, b)

    def test_csv_is_sparse_and_inherits(self, tmp_path):
        # Second segment only changes one cell; the CSV must carry only
        # that row and loading must inherit the rest.
        t0 = np.array([[0.5, 0.25]])
        t1 = np.array([[0.5, 0.75]])
        trace = TraceTable(starts=(0, 10), tables=(t0, t1))
        path = tmp_path / "sparse.csv"
        trace.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + 2 + 1  # header, full first segment, one change
        loaded = TraceTable.from_csv(path)
        np.testing.assert_array_equal(loaded.tables[1], t1)

    def test_csv_rejects_incomplete_first_segment(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "start_step,channel,rate_index,theta\n0,1,1,0.5\n0,2,2,0.5\n"
        )
        with pytest.raises(ValueError, match="leaves channel 1, rate 2 unspecified"):
            TraceTable.from_csv(path)

    def test_csv_rejects_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("step,channel,rate_index,theta\n0,1,1,0.5\n")
        with pytest.raises(ValueError, match="columns"):
            TraceTable.from_csv(path)


class TestTraceEnvironment:
    def test_segment_optima(self, swap_trace):
        env = trace_env(swap_trace, RateSet.of([1.0, 2.0]), seed=0)
        assert env.best_pair_at(0) == (1, 1)
        assert env.best_pair_at(150) == (2, 1)
        assert env.mu_star_at(0) == 0.9

    def test_horizon_enforced(self, swap_trace):
        env = trace_env(swap_trace, RateSet.of([1.0, 2.0]))
        env.theta_at(199)
        with pytest.raises(ValueError, match="step 200 beyond horizon 200"):
            env.theta_at(200)

    def test_rate_width_must_match(self, swap_trace):
        with pytest.raises(ValueError, match="rate count"):
            trace_env(swap_trace, RateSet.of([1.0]))


class TestAccelerate:
    def make(self):
        return TraceTable(
            starts=(0, 7, 20, 33),
            tables=tuple(np.full((1, 1), v) for v in (0.1, 0.2, 0.3, 0.4)),
            horizon=40,
        )

    def test_identity_factor(self):
        t = self.make()
        out = accelerate(t, 1)
        assert out.starts == t.starts
        assert out.horizon == t.horizon

    def test_divides_starts_and_horizon(self):
        out = accelerate(self.make(), 2)
        assert out.starts == (0, 3, 10, 16)
        assert out.horizon == 20

    def test_colliding_segments_keep_latest(self):
        out = accelerate(self.make(), 13)
        assert out.starts == (0, 1, 2)
        assert [tab[0, 0] for tab in out.tables] == [0.2, 0.3, 0.4]
        assert out.horizon == 3

    def test_composition(self):
        t = self.make()
        ab = accelerate(accelerate(t, 2), 3)
        direct = accelerate(t, 6)
        assert ab.starts == direct.starts
        assert ab.horizon == direct.horizon
        for x, y in zip(ab.tables, direct.tables):
            np.testing.assert_array_equal(x, y)

    def test_extreme_factor_clamps_to_one_step(self):
        out = accelerate(self.make(), 1000)
        assert out.starts == (0,)
        assert out.horizon == 1
        assert out.tables[0][0, 0] == 0.4  # latest segment wins the merge


class TestSyntheticDrift:
    def spec(self, **kw):
        base = dict(
            rates=RateSet.of([1.0, 2.0, 4.0]),
            channels=3,
            horizon=400,
            step_std=0.02,
            seed=9,
        )
        base.update(kw)
        return SyntheticDriftSpec(**base)

    def test_validation(self):
        with pytest.raises(ValueError, match="horizon"):
            self.spec(horizon=0)
        with pytest.raises(ValueError, match="step_std"):
            self.spec(step_std=-0.1)
        with pytest.raises(ValueError, match="softness"):
            self.spec(softness=0.0)
        with pytest.raises(ValueError, match="one threshold per rate"):
            self.spec(thresholds=(0.2, 0.4))
        with pytest.raises(ValueError, match="strictly increasing"):
            self.spec(thresholds=(0.4, 0.4, 0.5))

    def test_default_thresholds_spread_evenly(self):
        spec = self.spec(latent_lo=0.0, latent_hi=1.0)
        np.testing.assert_allclose(spec.threshold_array(), [0.25, 0.5, 0.75])

    def test_json_round_trip(self):
        spec = self.spec(thresholds=(0.1, 0.5, 0.9))
        again = SyntheticDriftSpec.from_json_dict(spec.to_json_dict())
        assert again == spec

    def test_unknown_keys_rejected(self):
        data = self.spec().to_json_dict()
        data["velocity"] = 1
        with pytest.raises(ValueError, match="unknown drift spec keys"):
            SyntheticDriftSpec.from_json_dict(data)

    def test_rows_nonincreasing_in_rate(self):
        env = synth_drift_env(self.spec())
        for step in (0, 57, 399):
            th = env.theta_at(step)
            assert np.all(np.diff(th, axis=1) <= 0)
            assert np.all((th > 0) & (th < 1))

    def test_zero_step_std_is_stationary(self):
        env = synth_drift_env(self.spec(step_std=0.0))
        np.testing.assert_array_equal(env.theta_at(0), env.theta_at(399))

    def test_latent_stays_in_range(self):
        env = synth_drift_env(self.spec(step_std=0.3))
        for step in range(0, 400, 7):
            lat = env.latent_at(step)
            assert np.all((lat >= 0.0) & (lat <= 1.0))

    def test_same_spec_same_path(self):
        a = synth_drift_env(self.spec())
        b = synth_drift_env(self.spec())
        np.testing.assert_array_equal(a.theta_at(250), b.theta_at(250))

    def test_theta_block_matches_pointwise(self):
        env = synth_drift_env(self.spec())
        block = env.theta_block(40, 60)
        for i, step in enumerate(range(40, 60)):
            np.testing.assert_array_equal(block[i], env.theta_at(step))

    def test_drift_to_trace_exact_at_unit_sampling(self):
        spec = self.spec(horizon=50)
        trace = drift_to_trace(spec, sample_every=1)
        env = synth_drift_env(spec)
        assert trace.horizon == 50
        for step in (0, 13, 49):
            np.testing.assert_array_equal(trace.theta_at(step), env.theta_at(step))

    def test_drift_to_trace_holds_between_samples(self):
        spec = self.spec(horizon=50)
        trace = drift_to_trace(spec, sample_every=10)
        env = synth_drift_env(spec)
        np.testing.assert_array_equal(trace.theta_at(19), env.theta_at(10))


class TestOutcomeTape:
    def test_matches_scalar_draws_across_chunk_boundary(self, tiny_model):
        envs = [stationary_env(tiny_model, seed=s) for s in (1, 2)]
        tape = OutcomeTape(envs[0], seeds=(1, 2))
        block = tape.block(500, 530)  # spans the 512-step chunk edge
        for si, env in enumerate(envs):
            for n in range(500, 530):
                for c in (1, 2):
                    for k in (1, 2):
                        assert block[si, n - 500, c - 1, k - 1] == env.draw((c, k), n)

    def test_trace_schedule_respected(self, swap_trace):
        rates = RateSet.of([1.0, 2.0])
        env = trace_env(swap_trace, rates, seed=4)
        tape = OutcomeTape(env, seeds=(4,))
        block = tape.block(90, 110)
        for n in range(90, 110):
            assert block[0, n - 90, 0, 0] == env.draw((1, 1), n)

    def test_validation(self, tiny_model):
        env = stationary_env(tiny_model)
        with pytest.raises(ValueError, match="distinct"):
            OutcomeTape(env, seeds=(1, 1))
        with pytest.raises(ValueError, match="at least one seed"):
            OutcomeTape(env, seeds=())
        tape = OutcomeTape(env, seeds=(1,))
        with pytest.raises(ValueError, match="stop"):
            tape.block(10, 10)
