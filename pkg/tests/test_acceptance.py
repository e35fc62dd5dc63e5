"""Acceptance gate: every criterion prints one PASS/FAIL line with timing.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines. Each
test measures first and asserts afterwards, so a failing criterion still
reports its measured numbers before the assert fires.
"""

import os
import time

import numpy as np
import pytest

from softkge import (
    EmbeddingTable,
    LossConfig,
    TrainConfig,
    evaluate,
    fit_slack,
    generate_synthetic,
    init_embeddings,
    load_dataset,
    loss_gradients,
    optimal_slack,
    pair_loss,
    rank_of,
    score,
    score_batch,
    score_gradients,
    train,
)
from softkge.datasets import build_dataset

from tests import oracles

BOUNDARY = 1e-4


def report(name, ok, elapsed, budget, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\n{name}: {status} ({elapsed:.2f}s, budget {budget:.0f}s) {detail}")


def test_criterion_1_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    combos = [
        (kind, norm) for kind in ("mrl", "rs", "soft_margin") for norm in ("l1", "l2")
    ]
    worst = 0.0
    checked = 0
    while checked < 200:
        kind, norm = combos[checked % len(combos)]
        cfg = LossConfig(kind=kind, gamma=1.0, gamma1=0.5, gamma2=1.5)
        table = EmbeddingTable(
            entities=rng.normal(0, 0.5, size=(6, 8)),
            relations=rng.normal(0, 0.5, size=(2, 8)),
            norm=norm,
        )
        h, t, h2, t2 = rng.choice(6, size=4, replace=False)
        r = int(rng.integers(2))
        pos, neg = (int(h), r, int(t)), (int(h2), r, int(t2))
        xi = float(rng.uniform(0.0, 1.0))
        res_p = table.entities[pos[0]] + table.relations[r] - table.entities[pos[2]]
        res_n = table.entities[neg[0]] + table.relations[r] - table.entities[neg[2]]
        f_pos, f_neg = float(score(table, pos)), float(score(table, neg))
        # stay away from every hinge and sign kink
        margins = [abs(f_pos + cfg.gamma - f_neg)]
        if kind != "mrl":
            margins.append(abs(f_pos - cfg.gamma1))
        if kind == "soft_margin":
            margins.append(abs(cfg.gamma2 - f_neg - xi))
        if norm == "l1":
            margins += [float(np.abs(res_p).min()), float(np.abs(res_n).min())]
        else:
            margins += [f_pos, f_neg]
        if min(margins) < BOUNDARY:
            continue

        for triple, which in ((pos, 0), (pos, 1), (pos, 2)):
            grads = score_gradients(table, triple)
            row = [triple[0], triple[1], triple[2]][which]

            def f_of(vec, _which=which, _triple=triple, _row=row):
                t2_ = table.copy()
                target = t2_.relations if _which == 1 else t2_.entities
                target[_row] = vec
                return score(t2_, _triple)

            base = (table.relations if which == 1 else table.entities)[row]
            fd = oracles.fd_gradient(f_of, base)
            worst = max(worst, oracles.relative_error(grads[which], fd))

        g = loss_gradients(cfg, f_pos, f_neg, xi)
        fd = (
            oracles.central_diff(lambda v: pair_loss(cfg, v, f_neg, xi), f_pos),
            oracles.central_diff(lambda v: pair_loss(cfg, f_pos, v, xi), f_neg),
            oracles.central_diff(lambda v: pair_loss(cfg, f_pos, f_neg, v), xi),
        )
        worst = max(worst, oracles.relative_error(g, fd))
        checked += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 5.0
    report(
        "criterion 1 (gradient correctness)", ok, elapsed, 5,
        f"worst relative error {worst:.2e} over {checked} instances",
    )
    assert worst < 1e-4
    assert elapsed < 5.0


def test_criterion_2_slack_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst_gap = 0.0
    for _ in range(1000):
        cfg = LossConfig(
            gamma1=float(rng.uniform(0.0, 1.0)),
            gamma2=float(rng.uniform(1.0, 2.5)),
            lambda0=float(rng.uniform(0.05, 5.0)),
            lambda1=float(rng.uniform(0.1, 3.0)),
            lambda2=float(rng.uniform(0.1, 3.0)),
        )
        f_neg = float(rng.uniform(0.0, 3.5))
        gap = abs(optimal_slack(f_neg, cfg) - oracles.grid_slack(f_neg, cfg))
        worst_gap = max(worst_gap, gap)

    # trained slack against frozen scores on a 50-triple toy; draws whose
    # optimum sits within 0.05 of a subgradient kink are redrawn, the same
    # way criterion 1 excludes near-boundary points
    cfg = LossConfig()
    kink = cfg.lambda2 / (2.0 * cfg.lambda0)
    table = EmbeddingTable(
        entities=rng.normal(0.0, 0.35, size=(40, 8)),
        relations=rng.normal(0.0, 0.35, size=(6, 8)),
    )
    pos, neg_h, neg_t = [], [], []
    while len(pos) < 50:
        h, t, h2, t2 = (int(x) for x in rng.integers(0, 40, size=4))
        r = int(rng.integers(6))
        f_neg = float(score(table, (h2, r, t2)))
        c = cfg.gamma2 - f_neg
        if abs(c) < 0.05 or abs(c - kink) < 0.05:
            continue
        pos.append((h, r, t))
        neg_h.append(h2)
        neg_t.append(t2)
    pos = np.array(pos)
    neg_h = np.array(neg_h)
    neg_t = np.array(neg_t)
    slack = fit_slack(table, pos, neg_h, neg_t, cfg, steps=500)
    f_negs = score_batch(table, np.column_stack([neg_h, pos[:, 1], neg_t]))
    oracle = np.array([optimal_slack(f, cfg) for f in f_negs])
    worst_fit = float(np.max(np.abs(slack.values - oracle)))

    elapsed = time.perf_counter() - start
    ok = worst_gap < 2e-4 and worst_fit < 1e-3 and elapsed < 10.0
    report(
        "criterion 2 (slack oracle)", ok, elapsed, 10,
        f"closed form vs grid {worst_gap:.2e}, trained vs closed form {worst_fit:.2e}",
    )
    assert worst_gap < 2e-4
    assert worst_fit < 1e-3
    assert elapsed < 10.0


def test_criterion_3_ranking_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    raw_triples = []
    for _ in range(60):
        raw_triples.append(
            (f"e{rng.integers(10)}", f"r{rng.integers(3)}", f"e{rng.integers(10)}")
        )
    for e in range(10):
        raw_triples.append((f"e{e}", "r0", f"e{(e + 1) % 10}"))
    n = len(raw_triples)
    vocab, ds = build_dataset(raw_triples[: n - 16], raw_triples[n - 16 : n - 8], raw_triples[n - 8 :])
    # coarse quarter-step coordinates so exact score ties actually occur
    model = EmbeddingTable(
        entities=np.round(rng.uniform(-1, 1, size=(vocab.n_entities, 4)) * 4) / 4.0,
        relations=np.round(rng.uniform(-1, 1, size=(vocab.n_relations, 4)) * 4) / 4.0,
        norm="l1",
    )
    every = ds.train + ds.valid + ds.test
    compared = 0
    mismatches = 0
    for triple in ds.test:
        for side in ("head", "tail"):
            if side == "tail":
                query = model.entities[triple.head] + model.relations[triple.relation]
                true_id = triple.tail
            else:
                query = model.entities[triple.tail] - model.relations[triple.relation]
                true_id = triple.head
            dists = np.abs(model.entities - query).sum(axis=1)
            removed = oracles.scan_removed(every, triple, side)
            want_raw = oracles.brute_force_rank(dists, true_id)
            want_filt = oracles.brute_force_rank(dists, true_id, removed)
            got_raw = rank_of(model, triple, side, ds, filtered=False)
            got_filt = rank_of(model, triple, side, ds, filtered=True)
            mismatches += int(got_raw != want_raw) + int(got_filt != want_filt)
            compared += 2
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 1.0
    report(
        "criterion 3 (ranking oracle)", ok, elapsed, 1,
        f"{mismatches} mismatches over {compared} rank comparisons",
    )
    assert mismatches == 0
    assert elapsed < 1.0


def planted_kg(noise=0.0, seed=404):
    return generate_synthetic(
        num_entities=200, num_relations=5, dim=16,
        triples_per_relation=400, noise=noise, seed=seed,
    )


def test_criterion_4_planted_model_end_to_end():
    start = time.perf_counter()
    vocab, ds, planted = planted_kg(noise=0.0)
    rep = evaluate(planted, ds, ks=(1, 10), split="test")
    elapsed = time.perf_counter() - start
    ok = rep.mr_filtered == 1.0 and rep.hits_at_k_filtered[1] == 1.0 and elapsed < 5.0
    report(
        "criterion 4 (planted model end-to-end)", ok, elapsed, 5,
        f"filtered MR {rep.mr_filtered!r}, filtered Hit@1 {rep.hits_at_k_filtered[1]!r}",
    )
    assert rep.mr_filtered == 1.0
    assert rep.hits_at_k_filtered[1] == 1.0
    assert elapsed < 5.0


def test_criterion_5_training_end_to_end():
    start = time.perf_counter()
    vocab, ds, _ = planted_kg(noise=0.0)
    cfg = TrainConfig(dim=16, loss=LossConfig(), max_epochs=200, eval_every=10, seed=0)
    model = init_embeddings(vocab, cfg.dim, cfg.seed)
    result = train(model, ds, cfg)
    elapsed = time.perf_counter() - start
    hit10 = result.best_hit10 or 0.0
    ok = hit10 >= 0.95 and elapsed < 120.0
    report(
        "criterion 5 (training end-to-end)", ok, elapsed, 120,
        f"val filtered Hit@10 {hit10:.4f} at epoch {result.best_epoch} "
        f"of {result.epochs_run}",
    )
    assert hit10 >= 0.95
    assert elapsed < 120.0


def test_criterion_6_directional_ordering_under_noise():
    start = time.perf_counter()
    per_kind = {"soft_margin": [], "mrl": []}
    budget_epochs = 30
    for seed in range(5):
        vocab, ds, _ = planted_kg(noise=0.05, seed=500 + seed)
        for kind in per_kind:
            cfg = TrainConfig(
                dim=16,
                loss=LossConfig(kind=kind),
                max_epochs=budget_epochs,
                eval_every=10,
                patience=0,
                seed=seed,
                false_negative_rate=0.05,
            )
            model = init_embeddings(vocab, cfg.dim, cfg.seed)
            result = train(model, ds, cfg)
            rep = evaluate(result.model, ds, ks=(10,), split="test")
            per_kind[kind].append(rep.hits_at_k_filtered[10])
    soft = float(np.mean(per_kind["soft_margin"]))
    mrl = float(np.mean(per_kind["mrl"]))
    elapsed = time.perf_counter() - start
    ok = soft >= mrl
    report(
        "criterion 6 (directional ordering under noise)", ok, elapsed, 120,
        f"soft-margin Hit@10 {soft:.4f} vs MRL {mrl:.4f} over 5 seeds "
        f"(equal budget {budget_epochs} epochs, noise 0.05, 5% false negatives)",
    )
    assert soft >= mrl
    assert elapsed < 120.0


GOLD_ENV = "SOFTKGE_GOLD_DIR"


def test_criterion_7_conditional_exact_reproduction():
    gold = os.environ.get(GOLD_ENV, "").strip()
    if not gold:
        pytest.skip(
            f"criterion 7 (conditional reproduction): set {GOLD_ENV} to a "
            "directory holding train.tsv/valid.tsv/test.tsv to enable; the "
            "reference corpus is not archived with this repository"
        )
    start = time.perf_counter()
    vocab, ds = load_dataset(
        os.path.join(gold, "train.tsv"),
        os.path.join(gold, "valid.tsv"),
        os.path.join(gold, "test.tsv"),
    )
    from softkge import grid_search

    results = {}
    for kind in ("soft_margin", "mrl"):
        base = TrainConfig(loss=LossConfig(kind=kind), max_epochs=1000, eval_every=50)
        ranked = grid_search(vocab, ds, base)
        best = ranked[0]
        model = init_embeddings(vocab, best.config.dim, best.config.seed)
        outcome = train(model, ds, best.config)
        rep = evaluate(outcome.model, ds, ks=(10,), split="test")
        results[kind] = (rep.hits_at_k_filtered[10], rep.mr_filtered)
    elapsed = time.perf_counter() - start
    soft_hit, soft_mr = results["soft_margin"]
    mrl_hit, _ = results["mrl"]
    ok = soft_hit >= 0.99 and soft_mr <= 2.2 and mrl_hit >= 0.94
    report(
        "criterion 7 (conditional reproduction)", ok, elapsed, 0,
        f"soft-margin Hit@10 {soft_hit:.4f} MR {soft_mr:.3f}; MRL Hit@10 {mrl_hit:.4f}",
    )
    assert soft_hit >= 0.99
    assert soft_mr <= 2.2
    assert mrl_hit >= 0.94


def test_criterion_8_protocol_invariants():
    start = time.perf_counter()
    from softkge import AdaGradState, NegativeSampler, SlackStore
    from softkge.training import train_epoch

    vocab, ds, _ = generate_synthetic(80, 2, 8, 144, noise=0.02, seed=808)
    cfg = TrainConfig(
        dim=8, loss=LossConfig(), batch_size=128, max_epochs=12,
        eval_every=4, patience=0, seed=2,
    )
    problems = []

    # slack non-negativity after every epoch
    model = init_embeddings(vocab, cfg.dim, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    sampler = NegativeSampler(
        ds.split_array("train"), vocab.n_entities, vocab.n_relations, rng
    )
    state = AdaGradState.for_table(model)
    slack = SlackStore.zeros(len(ds.train))
    for epoch in range(1, cfg.max_epochs + 1):
        train_epoch(model, slack, ds, sampler, cfg, state, rng, epoch)
        if slack.min_value < 0.0:
            problems.append(f"negative slack after epoch {epoch}")

    # per-observation rank relations and aggregate bounds
    rep = evaluate(model, ds, ks=(1, 3, 10), split="test")
    for triple, side, raw, filt in rep.per_triple_ranks:
        if filt > raw:
            problems.append(f"filtered rank {filt} exceeds raw {raw} for {triple} {side}")
            break
    hits = [rep.hits_at_k_filtered[k] for k in (1, 3, 10)]
    if not (hits[0] <= hits[1] <= hits[2]):
        problems.append(f"Hits@k not monotone: {hits}")
    for mr in (rep.mr_raw, rep.mr_filtered):
        if not (1.0 <= mr <= vocab.n_entities):
            problems.append(f"MR {mr} outside [1, {vocab.n_entities}]")

    # fixed seed, sequential updates: logs and weights reproduce bit for bit
    runs = []
    for _ in range(2):
        m = init_embeddings(vocab, cfg.dim, cfg.seed)
        out = train(m, ds, cfg)
        runs.append((out.log.to_text(), out.model.entities.tobytes()))
    if runs[0][0] != runs[1][0]:
        problems.append("training logs differ between identical seeded runs")
    if runs[0][1] != runs[1][1]:
        problems.append("final weights differ between identical seeded runs")

    elapsed = time.perf_counter() - start
    ok = not problems
    report(
        "criterion 8 (protocol invariants)", ok, elapsed, 60,
        "all invariants held" if ok else "; ".join(problems),
    )
    assert not problems
