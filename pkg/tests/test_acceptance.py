"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (add ``-s`` to see lines as they
are produced); the lines are also repeated in the terminal summary.
"""

import json
import time
from statistics import NormalDist

import numpy as np
import pytest

from rankblend.averaging import rank_average, seed_average, simple_average
from rankblend.cli import dispatch
from rankblend.errors import AlignmentError, IngestError
from rankblend.metrics import accuracy, auroc, roc_curve
from rankblend.pipeline import LoopConfig, prepare, run_ensemble_loop
from rankblend.simplex import optimize_weights
from rankblend.store import LabelTable
from rankblend.synthetic import SyntheticConfig, generate

from conftest import make_labels, make_table, random_instance, record_criterion
from oracles import brute_force_auroc, grid_best_auroc, hand_accuracy


def test_criterion_1_auroc_matches_pair_count():
    rng = np.random.default_rng(1)
    worst, elapsed = 0.0, 0.0
    for k in range(1000):
        scores, y = random_instance(rng, n_max=64, ties=k % 3 == 0)
        table, labels = make_table(scores), make_labels(y)
        start = time.perf_counter()
        got = auroc(table, labels)
        elapsed += time.perf_counter() - start
        worst = max(worst, abs(got - brute_force_auroc(scores, y)))
    ok = worst <= 1e-12 and elapsed < 5.0
    record_criterion("criterion 1", ok, f"max |err| {worst:.3g} over 1000 instances, {elapsed:.3f}s")
    assert ok


TRANSFORMS = {
    "affine": lambda x: 3.0 * x - 1.0,
    "exp": np.exp,
    "signed cube": lambda x: np.sign(x - 0.5) * np.abs(x - 0.5) ** 3,
}


def test_criterion_2_rank_invariance():
    rng = np.random.default_rng(2)
    worst, rank_changed = 0.0, 0
    for _ in range(200):
        scores, y = random_instance(rng, n_max=64)
        labels = make_labels(y)
        base = auroc(make_table(scores), labels)
        for fn in TRANSFORMS.values():
            worst = max(worst, abs(auroc(make_table(fn(scores), strict=False), labels) - base))
        others = [make_table(rng.random(len(scores))) for _ in range(2)]
        before = rank_average([make_table(scores)] + others).scores
        for fn in TRANSFORMS.values():
            after = rank_average([make_table(fn(scores), strict=False)] + others).scores
            rank_changed += not np.array_equal(before, after)
    ok = worst < 1e-12 and rank_changed == 0
    record_criterion("criterion 2", ok, f"max AUROC change {worst:.3g}, rank-average differences {rank_changed}")
    assert ok


def test_criterion_3_roc_area_consistency():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        scores, y = random_instance(rng, n_max=64, ties=True)
        table, labels = make_table(scores), make_labels(y)
        worst = max(worst, abs(roc_curve(table, labels).area() - auroc(table, labels)))
    ok = worst <= 1e-12
    record_criterion("criterion 3", ok, f"max |trapezoid - auroc| {worst:.3g} over 200 tied instances")
    assert ok


def _pool(seed, n_models=5, n_samples=500):
    rng = np.random.default_rng(10_000 + seed)
    strengths = np.sort(rng.uniform(0.2, 0.6, n_models))
    cfg = SyntheticConfig(
        n_samples=n_samples, n_models=n_models, n_seeds=3, signal_strength=tuple(strengths), rng_seed=seed
    )
    return generate(cfg)


def test_criterion_4_simplex_optimizer_quality():
    below_uniform, below_grid, slowest, worst_gap = 0, 0, 0.0, -1.0
    for seed in range(20):
        models, dev_labels, _ = _pool(seed)
        dev = [seed_average(m)[0] for m in models]
        y = dev_labels.for_table(dev[0])
        start = time.perf_counter()
        weights, got, _ = optimize_weights(dev, dev_labels)
        slowest = max(slowest, time.perf_counter() - start)
        uniform = auroc(simple_average(dev), dev_labels)
        grid, _ = grid_best_auroc(np.vstack([t.scores for t in dev]), y, resolution=20)
        below_uniform += got < uniform - 1e-12
        below_grid += got < grid - 0.002
        worst_gap = max(worst_gap, grid - got)
    ok = below_uniform == 0 and below_grid == 0 and slowest < 10.0
    record_criterion(
        "criterion 4",
        ok,
        f"20 pools: below uniform {below_uniform}, below grid-0.002 {below_grid}, "
        f"max grid gap {worst_gap:.4g}, slowest {slowest:.2f}s",
    )
    assert ok


def test_criterion_5_monotone_rounds_and_anchor():
    violations = []
    for seed in range(50):
        models, dev_labels, _ = _pool(seed, n_samples=300)
        recipe, _, _ = run_ensemble_loop(models, dev_labels, LoopConfig(rng_seed=seed))
        rounds = recipe.round_aurocs
        singles = [auroc(seed_average(m)[0], dev_labels) for m in models]
        if any(b < a for a, b in zip(rounds, rounds[1:])) or rounds[-1] < max(singles) - 1e-12:
            violations.append(seed)
    ok = not violations
    record_criterion("criterion 5", ok, f"50 pools, violating seeds {violations}")
    assert ok


def _criterion_6_config(seed):
    # five models spaced evenly in expected single-model AUROC from 0.70 to 0.80;
    # a strength s gives AUROC Phi(s * sqrt(2) / sigma) with sigma the noise scale
    w, n_seeds = 0.6, 1
    sigma = (w**2 + (1 - w) ** 2 / n_seeds) ** 0.5
    targets = np.linspace(0.70, 0.80, 5)
    strengths = tuple(NormalDist().inv_cdf(t) * sigma / 2**0.5 for t in targets)
    return SyntheticConfig(
        n_samples=1000, n_models=5, n_seeds=n_seeds, signal_strength=strengths, shared_noise_weight=w, rng_seed=seed
    )


def test_criterion_6_ensemble_beats_best_single_on_test():
    wins, margins = 0, []
    for seed in range(20):
        models, dev_labels, test_labels = generate(_criterion_6_config(seed))
        _, final_test, _ = run_ensemble_loop(models, dev_labels, LoopConfig(rng_seed=seed))
        singles = prepare(models, "test", rank_normalize=False)
        best_single = max(auroc(t, test_labels) for t in singles.values())
        margin = auroc(final_test, test_labels) - best_single
        margins.append(margin)
        wins += margin > 0
    ok = wins >= 16
    record_criterion("criterion 6", ok, f"ensemble beat best single model in {wins}/20 trials, "
                     f"median margin {np.median(margins):.4f}")
    assert ok


def test_criterion_7_replay_is_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "synth.json"
    cfg.write_text(json.dumps({"n_samples": 200, "n_models": 3, "n_seeds": 2, "signal_strength": [0.3, 0.4, 0.5]}))
    pool = tmp_path / "pool"
    assert dispatch(["synth", "--config", str(cfg), "-o", str(pool), "--seed", "7"]) == 0
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        code = dispatch(
            ["ensemble", "--models-dir", str(pool), "--labels", str(pool / "dev_labels.jsonl"), "--seed", "7",
             "-o", str(d / "submission.csv"), "--recipe-out", str(d / "recipe.json")]
        )
        assert code == 0
        assert dispatch(["apply", "--models-dir", str(pool), "--recipe", str(d / "recipe.json"),
                         "-o", str(d / "replay.csv")]) == 0
        outputs.append({name: (d / name).read_bytes() for name in ("submission.csv", "recipe.json", "replay.csv")})
    capsys.readouterr()
    a, b = outputs
    ok = a == b and a["replay.csv"] == a["submission.csv"]
    record_criterion("criterion 7", ok, "two runs: submission.csv, recipe.json and replay identical" if ok
                     else "outputs differ between runs")
    assert ok


def test_criterion_8_accuracy_matches_hand_count():
    rng = np.random.default_rng(8)
    mismatches = 0
    for k in range(50):
        scores, y = random_instance(rng, n_max=64, ties=k % 2 == 0)
        threshold = float(scores[0]) if k % 5 == 0 else float(rng.random())
        got = accuracy(make_table(scores), make_labels(y), threshold)
        mismatches += got != hand_accuracy(scores, y, threshold)
    # boundary: a score exactly at the threshold counts as positive
    boundary = accuracy(make_table([0.5, 0.2]), make_labels([1, 0]), 0.5) == 1.0
    ok = mismatches == 0 and boundary
    record_criterion("criterion 8", ok, f"50 instances, {mismatches} mismatches, boundary proba==threshold "
                     f"{'positive' if boundary else 'wrong'}")
    assert ok


def _corpus(tmp):
    good = tmp / "good.csv"
    good.write_text("id,proba,label\n1,0.9,\n2,0.1,\n")
    labels = tmp / "labels.jsonl"
    labels.write_text('{"id":1,"label":1}\n{"id":2,"label":0}\n')
    files = {
        "dup.csv": "id,proba,label\n1,0.9,\n1,0.2,\n",
        "range.csv": "id,proba,label\n1,0.9,\n2,1.2,\n",
        "disjoint.csv": "id,proba,label\n7,0.9,\n8,0.1,\n",
        "bad_labels.jsonl": '{"id":1,"label":1}\n{"id":2,"label":3}\n',
    }
    for name, text in files.items():
        (tmp / name).write_text(text)
    return good, labels


def test_criterion_9_malformed_inputs(tmp_path, capsys):
    good, labels = _corpus(tmp_path)
    t = lambda name: str(tmp_path / name)
    cases = [
        ("duplicate ids", ["average", "--op", "simple", t("dup.csv"), str(good)], IngestError),
        ("out-of-range score", ["average", "--op", "rank", t("range.csv"), str(good)], IngestError),
        ("bad labels", ["optimize", "--dev", str(good), str(good), "--labels", t("bad_labels.jsonl")], IngestError),
        ("disjoint ids", ["average", "--op", "simple", t("disjoint.csv"), str(good)], AlignmentError),
        ("labels miss ids", ["evaluate", "--pred", t("disjoint.csv"), "--labels", str(labels)], AlignmentError),
    ]
    failures = []
    for name, argv, error in cases:
        out = tmp_path / f"out-{len(failures)}-{name.replace(' ', '_')}"
        full = argv + ([] if argv[0] == "evaluate" else ["-o", str(out)])
        code = dispatch(full)
        err = capsys.readouterr().err
        if code != 2 or error.__name__ not in err or out.exists():
            failures.append(name)
    leftovers = [p.name for p in tmp_path.iterdir() if p.name.startswith(("out-", ".tmp"))]
    ok = not failures and not leftovers
    record_criterion("criterion 9", ok, f"{len(cases)} malformed cases, failing {failures}, leftovers {leftovers}")
    assert ok
