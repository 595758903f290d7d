"""Acceptance suite. One test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The learning-gate fixture
trains the full pipeline on the standard desk suite (10 train / 5 held-out
layouts, 10x10 grid, 16 categories, 4 targets) and is shared by the
criteria that need a trained model. The ablation comparison (criterion 8)
is reported but non-gating, per its definition.
"""

import math
import time

import numpy as np
import numpy.testing as npt
import pytest

from acrgnav import gradcheck
from acrgnav import representation as rep
from acrgnav.config import Config
from acrgnav.expert import generate_expert_dataset
from acrgnav.layout import random_layout
from acrgnav.metrics import EpisodeTrace, spl, success_rate
from acrgnav.runner import RandomPolicy, evaluate
from acrgnav.train import run_training
from acrgnav.world import GridWorld, Observation
from oracles import bfs_optimal_actions

DESK_SEED = 42


def _report(criterion, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")


@pytest.fixture(scope="module")
def desk_suite():
    cfg = Config()
    rng = np.random.default_rng(DESK_SEED)
    train = [random_layout(rng, f"desk_train_{i:02d}") for i in range(10)]
    test = [random_layout(rng, f"desk_test_{i:02d}") for i in range(5)]
    return cfg, train, test


@pytest.fixture(scope="module")
def trained(desk_suite):
    """Full pipeline on the desk suite: expert data, imitation pretraining,
    behavior cloning, synchronous actor-critic."""
    cfg, train_layouts, test_layouts = desk_suite
    t0 = time.time()
    result = run_training(cfg, train_layouts, test_layouts, out_dir=None)
    result["wall_seconds"] = time.time() - t0
    return result


def test_criterion_1_gradient_suite():
    t0 = time.time()
    results = gradcheck.run_suite(seed=0)
    elapsed = time.time() - t0
    bad = [r for r in results if not r.ok]
    ok = not bad and elapsed < 120.0
    _report(1, ok, f"{len(results) - len(bad)}/{len(results)} gradient "
            f"checks below rel err {gradcheck.TOLERANCE:g} "
            f"(eps {gradcheck.EPS:g}) in {elapsed:.1f}s")
    assert elapsed < 120.0
    assert not bad, "\n".join(r.line() for r in bad)


def test_criterion_2_formula_oracles():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 60))
        rows = [(int(rng.integers(2)), int(rng.integers(1, 51)),
                 int(rng.integers(1, 25))) for _ in range(n)]
        traces = [EpisodeTrace("L", 0, (1, 1, 0, 1), [5] * ln, [0.0] * ln,
                               s, opt) for s, ln, opt in rows]
        sr = success_rate(traces)
        value = spl(traces)
        brute_sr = sum(r[0] for r in rows) / n
        brute_spl = sum(s * opt / max(ln, opt) for s, ln, opt in rows) / n
        worst = max(worst, abs(sr - brute_sr), abs(value - brute_spl))
        for s, ln, opt in rows:
            assert s * opt / max(ln, opt) <= s
    example = spl([EpisodeTrace("L", 0, (1, 1, 0, 1), [5] * 8, [0.0] * 8,
                                1, 4)])
    ok = worst <= 1e-12 and example == 0.5
    _report(2, ok, f"100 randomized trace sets, worst deviation from brute "
            f"force {worst:.2e}; worked example L_opt=4, L_n=8 -> {example}")
    assert worst <= 1e-12
    assert example == 0.5


def test_criterion_3_expert_optimality():
    t0 = time.time()
    cfg = Config()
    rng = np.random.default_rng(3)
    checked = 0
    for i in range(50):
        layout = random_layout(rng, f"opt_{i:02d}")
        target = int(rng.integers(4))
        env = GridWorld(layout, target, cfg)
        env.reset(seed=i)
        start = env.pose
        planner = env.planner
        optimal = planner.optimal_action_count(start, target)
        oracle = bfs_optimal_actions(layout, start.as_tuple(), target, cfg)
        assert optimal == oracle, (layout.layout_id, start, target)
        plan = planner.plan(start, target)
        success = None
        for action in plan:
            _, _, _, success = env.step(action)
        assert success == 1 and env.steps == optimal
        checked += 1
    elapsed = time.time() - t0
    ok = checked == 50 and elapsed < 60.0
    _report(3, ok, f"{checked}/50 layouts: expert replay succeeds with "
            f"L_n = L_opt and matches the BFS oracle, in {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_4_masking_invariant(desk_suite):
    cfg, train_layouts, test_layouts = desk_suite
    layouts = train_layouts + test_layouts
    rng = np.random.default_rng(4)
    count = 0
    while count < 10_000:
        layout = layouts[int(rng.integers(len(layouts)))]
        target = int(rng.integers(4))
        env = GridWorld(layout, target, cfg)
        obs = env.reset(seed=int(rng.integers(2 ** 62)))
        nodes = rep.depth_node_matrix(obs, target, cfg.num_categories)
        nonzero = np.nonzero(nodes[:, 0])[0]
        assert len(nonzero) <= 1
        if obs.visible[target]:
            assert list(nonzero) == [target]
        else:
            assert len(nonzero) == 0
        count += 1
        if count % 7 == 0:
            # structural check: the horizontal builder never reads depth or
            # vertical bbox coordinates
            mutated = Observation(obs.visible, obs.confidence,
                                  obs.bbox.copy(), obs.depth * 3.14 + 1.0,
                                  obs.ego)
            mutated.bbox[:, 1] = 0.05
            mutated.bbox[:, 3] = 0.95
            npt.assert_array_equal(
                rep.horizontal_node_matrix(obs, cfg.num_categories),
                rep.horizontal_node_matrix(mutated, cfg.num_categories))
    _report(4, True, f"{count} simulated observations: depth column masked "
            "to the visible target row; horizontal nodes read no depth or "
            "vertical coordinate")


def test_criterion_5_sync_training_determinism(desk_suite, tmp_path):
    cfg, train_layouts, test_layouts = desk_suite
    small = cfg.replace(expert_episodes_per_layout=20, pretrain_epochs=1,
                        policy_bc_epochs=1, a3c_episodes=500, sync=True,
                        eval_episodes=0, seed=11)

    def run(out):
        return run_training(small, train_layouts, test_layouts,
                            out_dir=tmp_path / out)

    r1 = run("run_a")
    r2 = run("run_b")
    losses1 = r1["summary"]["loss_log"]
    losses2 = r2["summary"]["loss_log"]
    identical_losses = losses1 == losses2
    bytes1 = (tmp_path / "run_a" / "final.ckpt").read_bytes()
    bytes2 = (tmp_path / "run_b" / "final.ckpt").read_bytes()
    ok = identical_losses and bytes1 == bytes2 and len(losses1) > 0
    _report(5, ok, f"two synchronous 500-episode runs: {len(losses1)} "
            f"segment losses bit-identical={identical_losses}, "
            f"checkpoint bytes identical={bytes1 == bytes2}")
    assert identical_losses
    assert bytes1 == bytes2


def test_criterion_6_desk_scale_learning_gate(desk_suite, trained):
    cfg, train_layouts, test_layouts = desk_suite
    targets = list(cfg.target_categories)
    trained_success = trained["summary"]["eval"]["success"]
    random_report = evaluate(RandomPolicy(np.random.default_rng(123)),
                             test_layouts, targets, cfg.eval_episodes,
                             seed=cfg.seed + 999, cfg=cfg)
    wall_minutes = trained["wall_seconds"] / 60.0
    ok = (trained_success >= 0.80 and random_report.success <= 0.20
          and wall_minutes <= 45.0)
    _report(6, ok, f"held-out success {trained_success:.3f} (gate >= 0.80), "
            f"random baseline {random_report.success:.3f} (gate <= 0.20), "
            f"pipeline wall time {wall_minutes:.1f} min (gate <= 45)")
    assert wall_minutes <= 45.0
    assert random_report.success <= 0.20
    assert trained_success >= 0.80


def test_criterion_7_pretraining_gate(trained):
    pre = trained["summary"]["pretrain"]
    accuracy = pre["holdout_accuracy"][9]  # after exactly 10 epochs
    initial = pre["initial_loss"]
    ok = accuracy >= 0.85 and abs(initial - math.log(6)) < 0.05
    _report(7, ok, f"holdout accuracy after 10 epochs {accuracy:.3f} "
            f"(gate >= 0.85); initial loss {initial:.4f} vs ln 6 = "
            f"{math.log(6):.4f}")
    assert abs(initial - math.log(6)) < 0.05
    assert accuracy >= 0.85


def test_criterion_8_ablation_trend_reported(desk_suite):
    # indicative and non-gating: full two-graph model vs single-graph
    # ablations over 3 seeds at reduced training budgets; violations are
    # reported with seed-level detail, never failed
    cfg, train_layouts, test_layouts = desk_suite
    targets = list(cfg.target_categories)
    budget = cfg.replace(expert_episodes_per_layout=150, pretrain_epochs=3,
                         policy_bc_epochs=3, a3c_episodes=300,
                         eval_episodes=100)
    results = {}
    for variant in ("acrg", "ohrg", "atdrg"):
        per_seed = []
        for seed in (0, 1, 2):
            vcfg = budget.replace(variant=variant, seed=seed)
            dataset = generate_expert_dataset(
                train_layouts, targets, vcfg.expert_episodes_per_layout,
                seed=seed, cfg=vcfg)
            out = run_training(vcfg, train_layouts, test_layouts,
                               out_dir=None, dataset=dataset)
            per_seed.append(out["summary"]["eval"]["success"])
        results[variant] = per_seed
    means = {v: float(np.mean(s)) for v, s in results.items()}
    ordered = means["acrg"] >= means["ohrg"] >= means["atdrg"]
    detail = ", ".join(
        f"{v}: mean {means[v]:.3f} seeds {[round(float(x), 3) for x in s]}"
        for v, s in results.items())
    _report(8, True, f"(non-gating) ordering full >= horizontal-only >= "
            f"depth-only {'holds' if ordered else 'VIOLATED'}; {detail}")
    if not ordered:
        print("  note: ordering violation reported above with seed-level "
              "detail; criterion 8 is indicative only")
