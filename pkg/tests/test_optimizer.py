import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import portal_config
from semirigid.bench import benchmark
from semirigid.constraints import Limits
from semirigid.fuzzy import FuzzyConfig, Shape
from semirigid.loading import LoadSettings, SeismicSpec, GravitySpec
from semirigid.model import ConfigError, DesignGroup, Role, build_frame
from semirigid.optimizer import (HISTORY_HEADER, NEWTONS_PER_TONNE, Encoding, Evaluator, FitnessRecord, GAConfig,
                                 Problem, bits_for, calibrate_objective, crossover_children, decode, encode,
                                 evaluate, evaluate_indices, mutate, one_point_crossover, ranking, run,
                                 run_single, step_generation)
from semirigid.sections import default_catalog

CRISP = FuzzyConfig(shape=Shape.CRISP)


def groups(*sizes):
    cat = default_catalog()
    return [DesignGroup(k, f"G{k}", tuple(cat.entries[:n]), Role.BEAM) for k, n in enumerate(sizes)]


def portal_problem(fuzzy=CRISP, loads=None, **cfg):
    frame = build_frame(portal_config(**cfg, pool=("W12X14", "W12X22", "W14X34", "W14X48", "W16X31",
                                                       "W16X57")), default_catalog())
    return Problem(frame, loads or LoadSettings(), Limits(), fuzzy, name="portal")


def test_elite_counts():
    assert GAConfig(30, 0.1).n_elite == 2  # round(3) leaves 27, which cannot pair up
    assert GAConfig(31, 0.1).n_elite == 3
    assert GAConfig(10, 0.1).n_elite == 2
    assert GAConfig(30, 0.0).n_elite == 2
    for pop in range(2, 40):
        for rate in (0.0, 0.05, 0.1, 0.3):
            cfg = GAConfig(pop, rate)
            assert cfg.n_elite >= 1 and (pop - cfg.n_elite) % 2 == 0
            assert cfg.n_elite + 2 * cfg.n_crossovers == pop


@pytest.mark.parametrize("kwargs", [dict(population_size=1), dict(mutation_rate=1.5), dict(max_generations=0),
                                    dict(restarts=0), dict(selection="roulette")])
def test_ga_config_validation(kwargs):
    with pytest.raises(ConfigError):
        GAConfig(**kwargs)


def test_ga_from_config():
    cfg = GAConfig.from_config({"population": 20, "generations": 5, "selection": "tournament2"})
    assert (cfg.population_size, cfg.max_generations, cfg.selection) == (20, 5, "tournament2")
    with pytest.raises(ConfigError):
        GAConfig.from_config({"population": "many"})


# ---------------------------------------------------------------- encoding


def test_encoding_examples():
    g8, g5 = groups(8, 5)
    assert bits_for(8) == 3 and bits_for(5) == 3 and bits_for(1) == 0
    assert encode([5], [g8]).bits == (1, 0, 1)
    assert decode([1, 0, 1], [g8]) == (5,)
    assert decode([1, 1, 0], [g5]) == (1,)
    assert decode([0] * 6, [g8, g5]) == (0, 0)


@given(st.lists(st.integers(1, 40), min_size=1, max_size=6).flatmap(
    lambda sizes: st.tuples(st.just(sizes), st.tuples(*[st.integers(0, n - 1) for n in sizes]))))
def test_encode_decode_round_trip(data):
    sizes, idx = data
    gs = groups(*sizes)
    c = encode(idx, gs)
    assert len(c.bits) == sum(math.ceil(math.log2(n)) if n > 1 else 0 for n in sizes)
    assert decode(c, gs) == idx == c.decoded


@given(st.lists(st.integers(2, 40), min_size=1, max_size=5), st.data())
def test_repair_yields_valid_indices(sizes, data):
    enc = Encoding(groups(*sizes))
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=enc.length, max_size=enc.length)), dtype=np.uint8)
    decoded = enc.decode(enc.repair(bits))
    assert all(0 <= i < n for i, n in zip(decoded, sizes))
    assert decoded == enc.decode(bits)


# ---------------------------------------------------------------- operators


def test_crossover_at_last_position_swaps_last_bit():
    a = np.array([0, 0, 0, 0], dtype=np.uint8)
    b = np.array([1, 1, 1, 1], dtype=np.uint8)
    c, d = one_point_crossover(a, b, 3)
    assert c.tolist() == [0, 0, 0, 1] and d.tolist() == [1, 1, 1, 0]


def test_identical_parents_without_mutation_reproduce_parents():
    rng = np.random.Generator(np.random.PCG64(1))
    parent = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    cfg = GAConfig(6, 0.0, 0.0)
    kids = mutate(crossover_children([parent.copy() for _ in range(6)], list(range(6)), cfg, rng), 0.0, rng)
    assert all(k.tolist() == parent.tolist() for k in kids)


def test_full_mutation_complements():
    rng = np.random.Generator(np.random.PCG64(3))
    kids = [np.array([1, 0, 1, 1, 0], dtype=np.uint8), np.array([0, 0, 0, 1, 1], dtype=np.uint8)]
    out = mutate(kids, 1.0, rng)
    assert [o.tolist() for o in out] == [[0, 1, 0, 0, 1], [1, 1, 1, 0, 0]]


def _records(n, seed):
    rng = np.random.default_rng(seed)
    return [FitnessRecord((k,), float(rng.uniform(1, 2)), lam, lam, 0.5, 0.0, -lam)
            for k, lam in enumerate(rng.uniform(0, 1, n))]


@given(st.integers(2, 40), st.floats(0.0, 0.5), st.floats(0.0, 1.0), st.integers(0, 2**32))
def test_step_generation_size_and_elites(pop, rate, mut, seed):
    cfg = GAConfig(pop, rate, mut)
    enc = Encoding(groups(24, 24, 5))
    rng = np.random.Generator(np.random.PCG64(seed))
    population = [enc.repair(rng.integers(0, 2, enc.length, dtype=np.uint8)) for _ in range(pop)]
    records = _records(pop, seed)
    nxt = step_generation(population, records, cfg, rng, enc)
    assert len(nxt) == pop
    order = ranking(records)
    for k in range(cfg.n_elite):
        assert nxt[k].tolist() == population[order[k]].tolist()
    assert all(len(c) == enc.length for c in nxt)


def test_ranking_tie_breaks():
    a = FitnessRecord((0,), 10.0, 1.0, 1.0, 0.9, 0, 0)
    b = FitnessRecord((1,), 9.0, 1.0, 1.0, 0.8, 0, 0)
    c = FitnessRecord((2,), 5.0, 0.0, 0.0, 1.6, 0, 0)
    d = FitnessRecord((3,), 6.0, 0.0, 0.0, 1.2, 0, 0)
    assert ranking([a, b, c, d]) == [1, 0, 3, 2]


def test_tournament_selection_runs_deterministically():
    p = portal_problem()
    cfg = GAConfig(10, 0.1, 0.01, 5, seed=4, selection="tournament2")
    a, b = run_single(p, cfg, 4), run_single(p, cfg, 4)
    assert a.history_csv() == b.history_csv()


# ---------------------------------------------------------------- evaluation


def test_evaluate_table_design_weight_basis():
    p = replace(benchmark("frame3"), fuzzy=CRISP)
    pool = [s.name for s in p.frame.groups[0].pool]
    idx = [pool.index(n) for n in ("W12X16", "W16X40", "W14X43", "W14X34")]
    rec = evaluate_indices(idx, p)
    # reference rigid standard-GA design, 4.2795 t
    assert rec.weight / NEWTONS_PER_TONNE == pytest.approx(4.2795, rel=1e-3)
    assert rec == evaluate(encode(idx, p.frame.groups), p)


def test_heavy_violation_gives_zero_lambda():
    p = replace(benchmark("frame3"), fuzzy=FuzzyConfig(f_lower=1e4, f_upper=2e4, f_max=3e4))
    rec = evaluate_indices((0, 0, 0, 0), p)
    assert rec.worst >= 1.5 and rec.lam == 0.0 and rec.fitness == 0.0 and not rec.feasible


def test_uncalibrated_fuzzy_shape_refuses():
    with pytest.raises(ConfigError):
        evaluate_indices((0, 0), portal_problem(fuzzy=FuzzyConfig()))


def test_unstable_design_is_flagged():
    p = portal_problem(beam_conn="pinned", base="pinned")
    rec = evaluate_indices((2, 2), p)
    assert rec.unstable and rec.fitness == 0.0 and not rec.feasible and rec.worst == math.inf


def test_parallel_evaluation_matches_serial():
    p = portal_problem()
    keys = [(i, j) for i in range(6) for j in range(6)]
    with Evaluator(p, jobs=2) as par:
        a = par(keys)
    b = Evaluator(p)(keys)
    assert a == b


# ---------------------------------------------------------------- runs


def test_history_csv_format():
    res = run_single(portal_problem(), GAConfig(8, 0.1, 0.01, 4), 11)
    lines = res.history_csv().splitlines()
    assert lines[0] == ",".join(HISTORY_HEADER)
    assert len(lines) == 5


def test_seeded_runs_are_identical():
    p, cfg = portal_problem(), GAConfig(10, 0.1, 0.02, 8, seed=5, restarts=2)
    a, b = run(p, cfg), run(p, cfg)
    assert [r.history_csv() for r in a.restarts] == [r.history_csv() for r in b.restarts]
    assert a.summary() == b.summary()
    assert [r.seed for r in a.restarts] == [5, 6]


def test_parallel_run_matches_serial():
    p, cfg = portal_problem(), GAConfig(10, 0.1, 0.02, 6, seed=2)
    assert run(p, cfg, jobs=2).restarts[0].history_csv() == run(p, cfg).restarts[0].history_csv()


def test_restart_best_no_heavier_than_any_restart():
    out = run(portal_problem(), GAConfig(10, 0.1, 0.02, 6, seed=9, restarts=3))
    feasible = [r.best.weight for r in out.restarts if r.best.feasible]
    if feasible:
        assert out.best.weight <= min(feasible)
    assert out.best_design.keys() == {"C", "B"}


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_best_lambda_never_decreases(seed):
    p = portal_problem(fuzzy=FuzzyConfig(f_lower=2e4, f_upper=3e4, f_max=4.5e4))
    res = run_single(p, GAConfig(10, 0.1, 0.05, 12), seed)
    lams = [h.best_lambda for h in res.history]
    assert all(b >= a for a, b in zip(lams, lams[1:]))
    so_far = [h.best_so_far_weight_n for h in res.history]
    assert all(b <= a for a, b in zip(so_far, so_far[1:]))


def test_unconstrained_crisp_ga_reduces_weight():
    loads = LoadSettings(GravitySpec(0.0, 0.0, 0.0), SeismicSpec(A=0.0))
    p = portal_problem(loads=loads)
    res = run_single(p, GAConfig(10, 0.1, 0.05, 15), 21)
    assert res.history[-1].best_weight_n <= res.history[0].best_weight_n
    assert all(r.lam == 1.0 for r in [res.best])


def test_calibration_sets_bounds_from_pilot():
    p = portal_problem(fuzzy=FuzzyConfig())
    cfg = GAConfig(10, 0.1, 0.02, 5, seed=1, pilot_generations=3)
    fz = calibrate_objective(p, cfg)
    assert fz.calibrated
    assert fz.f_lower == pytest.approx(0.6 * fz.f_upper) and fz.f_max == pytest.approx(1.5 * fz.f_upper)
    pinned = portal_problem(fuzzy=FuzzyConfig(f_upper=5e4))
    fz2 = calibrate_objective(pinned, cfg)
    assert fz2.f_upper == 5e4 and fz2.f_lower == pytest.approx(3e4)
