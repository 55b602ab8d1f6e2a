import math

import numpy as np
import pytest

from pixelpatch.grid import PixelGrid, make_grid, repair_floating
from pixelpatch.optim import (AntennaEvaluator, CostSpec, EvalCache, FunctionEvaluator,
                              S_SHAPED, Swarm, SwarmConfig, V_SHAPED, evaluate_cost,
                              hinge_cost, position_update, run, transfer,
                              velocity_update)
from pixelpatch.sparam import SParamSet


def onemax_evaluator(n=64):
    return FunctionEvaluator(n, lambda b: float(np.count_nonzero(b == 0)))


def flat_sset(s11_db, s21_db):
    freqs = np.linspace(3e9, 8e9, 5)
    s = np.zeros((5, 2, 2), complex)
    s[:, 0, 0] = s[:, 1, 1] = 10 ** (s11_db / 20)
    s[:, 1, 0] = s[:, 0, 1] = 10 ** (s21_db / 20)
    return SParamSet(freqs, s)


class TestTransfer:
    def test_s_at_zero(self):
        assert transfer(0.0, S_SHAPED) == 0.5

    def test_v_at_zero(self):
        assert transfer(0.0, V_SHAPED) == 0.0

    def test_s_at_six_reference(self):
        # frozen from an independent evaluation of the logistic function
        assert transfer(6.0, S_SHAPED) == pytest.approx(0.9975273768433653, rel=1e-12)

    def test_range_and_vectorized(self):
        v = np.linspace(-8, 8, 101)
        for kind in (S_SHAPED, V_SHAPED):
            p = transfer(v, kind)
            assert ((0 <= p) & (p <= 1)).all()

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            transfer(0.0, "tanh")


class TestVelocityUpdate:
    def test_zero_attraction_decays(self):
        x = np.array([1, 0, 1], dtype=np.uint8)
        v = np.array([1.0, -2.0, 0.5])
        out = velocity_update(v, x, x, x, 0.7, 2.0, 2.0,
                              np.ones(3), np.ones(3), 6.0)
        np.testing.assert_allclose(out, 0.7 * v)

    def test_hand_computed_kick(self):
        x = np.zeros(1, dtype=np.uint8)
        one = np.ones(1, dtype=np.uint8)
        out = velocity_update(np.zeros(1), x, one, one, 0.9, 2.0, 2.0,
                              np.ones(1), np.ones(1), 6.0)
        assert out[0] == pytest.approx(4.0)

    def test_clamp_always_holds(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = 16
            v = rng.normal(scale=10, size=n)
            x = rng.integers(0, 2, n).astype(np.uint8)
            pb = rng.integers(0, 2, n).astype(np.uint8)
            gb = rng.integers(0, 2, n).astype(np.uint8)
            out = velocity_update(v, x, pb, gb, 0.9, 2.0, 2.0,
                                  rng.random(n), rng.random(n), 6.0)
            assert (np.abs(out) <= 6.0).all()


class TestPositionUpdate:
    def test_s_threshold_rule(self):
        v = np.array([-6.0])
        # S(-6) ~ 0.0025; r = 0.9 lands above it -> bit 0
        out = position_update(np.array([1], np.uint8), v, S_SHAPED, np.array([0.9]))
        assert out[0] == 0

    def test_v_zero_velocity_keeps_position(self):
        x = np.array([1, 0, 1, 0], np.uint8)
        out = position_update(x, np.zeros(4), V_SHAPED, np.random.default_rng(0).random(4))
        assert (out == x).all()

    def test_v_flips_with_saturated_velocity(self):
        x = np.array([1, 0], np.uint8)
        out = position_update(x, np.array([50.0, 50.0]), V_SHAPED, np.array([0.5, 0.5]))
        assert (out == np.array([0, 1])).all()

    def test_deterministic_given_stream(self):
        v = np.linspace(-3, 3, 32)
        r = np.random.default_rng(42).random(32)
        x = np.zeros(32, np.uint8)
        a = position_update(x, v, S_SHAPED, r)
        b = position_update(x, v, S_SHAPED, r)
        assert (a == b).all()


class TestHingeCost:
    def test_both_met(self):
        assert hinge_cost(-15.0, -45.0, CostSpec()) == 0.0

    def test_match_shortfall_only(self):
        assert hinge_cost(-5.0, -45.0, CostSpec()) == pytest.approx(5.0)

    def test_both_shortfalls_weighted(self):
        spec = CostSpec(alpha=1.0, beta=1.0)
        assert hinge_cost(-5.0, -30.0, spec) == pytest.approx(5.0 + 10.0)
        spec2 = CostSpec(alpha=2.0, beta=0.5)
        assert hinge_cost(-5.0, -30.0, spec2) == pytest.approx(10.0 + 5.0)

    def test_costspec_validation(self):
        with pytest.raises(ValueError):
            CostSpec(t_match_db=1.0)
        with pytest.raises(ValueError):
            CostSpec(t_iso_db=-5.0)
        with pytest.raises(ValueError):
            CostSpec(alpha=0.0, beta=0.0)


class TestAntennaEvaluator:
    def _evaluator(self, results: dict):
        def pair_fn(a, b):
            return results[a.bitstring()]
        return AntennaEvaluator(3, 3, 1e-3, (1, 0), CostSpec(), pair_fn)

    def test_decode_inserts_feed_and_repairs(self):
        ev = AntennaEvaluator(3, 3, 1e-3, (1, 0), CostSpec(), lambda a, b: None)
        assert ev.n_bits == 8
        bits = np.zeros(8, np.uint8)
        bits[-1] = 1      # corner pixel (2, 2): floating, must be repaired away
        a, b = ev.decode(bits)
        assert a == b
        assert a.active_count() == 1
        assert a.get(1, 0) == 1

    def test_evaluate_cost_triples(self):
        grid = repair_floating(make_grid(3, 3, 0, feed=(1, 0)))
        key = grid.bitstring()
        for s11, s21, expect in ((-15.0, -45.0, 0.0), (-5.0, -45.0, 5.0),
                                 (-5.0, -30.0, 15.0)):
            ev = self._evaluator({key: flat_sset(s11, s21)})
            cost, got11, got21 = evaluate_cost(np.zeros(8, np.uint8), CostSpec(), ev)
            assert cost == pytest.approx(expect)
            assert got11 == pytest.approx(s11, abs=1e-9)
            assert got21 == pytest.approx(s21, abs=1e-9)

    def test_asymmetric_splits_bits(self):
        ev = AntennaEvaluator(3, 3, 1e-3, (1, 0), CostSpec(),
                              lambda a, b: flat_sset(-15, -45), asymmetric=True)
        assert ev.n_bits == 16
        bits = np.zeros(16, np.uint8)
        bits[0] = 1    # pixel (0,0) of element A only: touches feed, kept
        a, b = ev.decode(bits)
        assert a.active_count() == 2
        assert b.active_count() == 1
        assert ":" in ev.canonical_key(bits)


class TestEvalCache:
    def test_hit_returns_stored_triple(self):
        calls = []
        ev = FunctionEvaluator(4, lambda b: calls.append(1) or float(b.sum()))
        cache = EvalCache(ev)
        bits = np.array([1, 0, 1, 0], np.uint8)
        r1 = cache.evaluate(bits)
        r2 = cache.evaluate(bits)
        assert r1 == r2
        assert len(calls) == 1
        assert cache.hits == 1 and cache.misses == 1

    def test_cache_equals_fresh_recomputation(self):
        ev = FunctionEvaluator(6, lambda b: float(b.sum()) * 0.1)
        cache = EvalCache(ev)
        rng = np.random.default_rng(0)
        for _ in range(50):
            bits = rng.integers(0, 2, 6).astype(np.uint8)
            assert cache.evaluate(bits) == tuple(float(x) for x in ev.evaluate(bits))

    def test_phenotype_sharing_via_repair_key(self):
        # two genotypes repairing to the same conductor share one evaluation
        calls = []
        def pair_fn(a, b):
            calls.append(a.bitstring())
            return flat_sset(-15, -45)
        ev = EvalCache(AntennaEvaluator(3, 3, 1e-3, (1, 0), CostSpec(), pair_fn))
        base = np.zeros(8, np.uint8)
        floater = base.copy()
        floater[-1] = 1    # repaired away -> same canonical key
        ev.evaluate(base)
        ev.evaluate(floater)
        assert len(calls) == 1
        assert ev.hits == 1


class TestSwarmStep:
    def test_fixed_point_at_optimum(self):
        ev = onemax_evaluator(12)
        sw = Swarm(SwarmConfig(n_particles=4, n_iters=10, seed=0), ev)
        ones = np.ones(12, np.uint8)
        for p in sw.particles:
            p.position = ones.copy()
        sw.step()
        assert sw.gbest_cost == 0.0
        for _ in range(5):
            sw.step()
            assert sw.gbest_cost == 0.0

    def test_monotone_gbest(self):
        ev = onemax_evaluator(16)
        sw = Swarm(SwarmConfig(n_particles=20, n_iters=30, seed=5), ev)
        prev = math.inf
        for _ in range(30):
            sw.step()
            assert sw.gbest_cost <= prev
            prev = sw.gbest_cost

    def test_same_seed_same_state(self):
        def trajectory(seed):
            sw = Swarm(SwarmConfig(n_particles=8, n_iters=15, seed=seed), onemax_evaluator(24))
            for _ in range(15):
                sw.step()
            return ([p.position.copy() for p in sw.particles],
                    [p.velocity.copy() for p in sw.particles],
                    sw.gbest_cost, [h.gbest_cost for h in sw.history])
        a = trajectory(3)
        b = trajectory(3)
        assert all((x == y).all() for x, y in zip(a[0], b[0]))
        assert all((x == y).all() for x, y in zip(a[1], b[1]))
        assert a[2] == b[2] and a[3] == b[3]

    def test_failure_policy_keeps_pbest_and_inf_cost(self):
        class Flaky:
            n_bits = 16   # roomy space: step-2 positions won't hit the cache
            def __init__(self):
                self.n = 0
            def canonical_key(self, bits):
                return "".join(map(str, bits))
            def evaluate(self, bits):
                self.n += 1
                if self.n > 4:     # fail everything after the first step
                    raise RuntimeError("backend down")
                return float(np.count_nonzero(bits == 0)), 0.0, 0.0

        sw = Swarm(SwarmConfig(n_particles=4, n_iters=5, seed=1), Flaky())
        sw.step()
        g1 = sw.gbest_cost
        pb1 = [p.pbest_cost for p in sw.particles]
        sw.step()
        assert sw.failures
        assert sw.gbest_cost == g1
        assert [p.pbest_cost for p in sw.particles] == pb1


class TestRun:
    def test_zero_iterations_scores_initial_population(self):
        res = run(SwarmConfig(n_particles=10, n_iters=0, seed=2), onemax_evaluator(16))
        assert res.best_cost < math.inf
        assert res.history == ()
        assert res.evaluations == 10

    def test_history_rows_equal_iterations(self):
        res = run(SwarmConfig(n_particles=5, n_iters=7, seed=0), onemax_evaluator(12))
        assert len(res.history) == 7
        assert [h.iteration for h in res.history] == list(range(1, 8))

    def test_onemax_smoke_both_transfers(self):
        # v-shaped retains agreement bits and should come close to optimal;
        # the sigmoid-sampling variant churns and lands lower (calibrated)
        res_v = run(SwarmConfig(n_particles=30, n_iters=200, transfer=V_SHAPED, seed=1),
                    onemax_evaluator(64))
        assert res_v.best_cost <= 4.0
        res_s = run(SwarmConfig(n_particles=30, n_iters=200, seed=1), onemax_evaluator(64))
        assert res_s.best_cost <= 12.0

    def test_single_objective_reductions_match_exhaustive(self):
        # alpha=0 / beta=0 reduce to the single goals; verify against brute
        # force over every post-repair phenotype of a 3x3 grid (<= 2^8 cases)
        nx = ny = 3
        feed = (1, 0)

        def pseudo_sset(a, b):
            ones = a.active_count()
            s11 = -3.0 * ones                   # better match with more metal
            s21 = -30.0 - 2.5 * (9 - ones)      # better isolation with less
            return flat_sset(s11, s21)

        for alpha, beta in ((1.0, 0.0), (0.0, 1.0)):
            spec = CostSpec(alpha=alpha, beta=beta)
            best_brute = math.inf
            for code in range(1 << 9):
                bits = np.array([(code >> i) & 1 for i in range(9)], np.uint8)
                g = repair_floating(PixelGrid(nx, ny, bits, 1e-3, feed))
                sset = pseudo_sset(g, g)
                cost = hinge_cost(sset.s11_db_at(5.4e9), sset.s21_db_at(5.4e9), spec)
                best_brute = min(best_brute, cost)
            ev = AntennaEvaluator(nx, ny, 1e-3, feed, spec, pseudo_sset)
            res = run(SwarmConfig(n_particles=20, n_iters=60, seed=4), ev)
            assert res.best_cost == pytest.approx(best_brute, abs=1e-9)


class TestCheckpoint:
    def test_state_roundtrip_continues_identically(self):
        ev_a = onemax_evaluator(24)
        full = Swarm(SwarmConfig(n_particles=8, n_iters=12, seed=9), ev_a)
        mid_state = None
        for it in range(12):
            full.step()
            if it == 4:
                mid_state = full.state_dict()
        import json
        mid_state = json.loads(json.dumps(mid_state))   # through-JSON fidelity
        resumed = Swarm.from_state(mid_state, onemax_evaluator(24))
        while resumed.iteration < 12:
            resumed.step()
        assert [h.gbest_cost for h in resumed.history] == \
            [h.gbest_cost for h in full.history]
        assert [h.gbest_key for h in resumed.history] == \
            [h.gbest_key for h in full.history]
        for p, q in zip(full.particles, resumed.particles):
            assert (p.position == q.position).all()
            assert (p.velocity == q.velocity).all()

    def test_incompatible_config_rejected(self):
        sw = Swarm(SwarmConfig(n_particles=4, n_iters=3, seed=0), onemax_evaluator(8))
        sw.step()
        state = sw.state_dict()
        with pytest.raises(ValueError, match="differ"):
            Swarm.from_state(state, onemax_evaluator(8),
                             config=SwarmConfig(n_particles=4, n_iters=3, seed=1))
        # extending n_iters is the allowed change
        Swarm.from_state(state, onemax_evaluator(8),
                         config=SwarmConfig(n_particles=4, n_iters=9, seed=0))

    def test_velocity_clamp_through_run(self):
        sw = Swarm(SwarmConfig(n_particles=6, n_iters=20, seed=8), onemax_evaluator(20))
        for _ in range(20):
            sw.step()
            for p in sw.particles:
                assert (np.abs(p.velocity) <= sw.config.v_max).all()


class TestGridsFromKey:
    def test_symmetric_round_trip(self):
        ev = AntennaEvaluator(3, 3, 1e-3, (1, 0), CostSpec(), None)
        bits = np.array([1, 0, 1, 0, 1, 0, 0, 1], np.uint8)
        key = ev.canonical_key(bits)
        a, b = ev.grids_from_key(key)
        assert a == b
        assert a.bitstring() == key
        from pixelpatch.grid import is_repaired
        assert is_repaired(a)

    def test_asymmetric_round_trip(self):
        ev = AntennaEvaluator(3, 3, 1e-3, (1, 0), CostSpec(), None, asymmetric=True)
        bits = np.zeros(16, np.uint8)
        bits[0] = bits[9] = 1
        key = ev.canonical_key(bits)
        a, b = ev.grids_from_key(key)
        assert key == a.bitstring() + ":" + b.bitstring()
