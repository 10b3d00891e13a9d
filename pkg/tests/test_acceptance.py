"""Acceptance gate: nine end-to-end checks, each printing one PASS/FAIL
line (bypassing capture so the lines land in the console output)."""

import math
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from hill import tensor_nn as tn
from hill.coding_tree import initial_tree
from hill.datagen import count_matrix, label_matrix
from hill.entropy_min import (
    build_coding_tree,
    build_two_level,
    delta_compress,
    delta_remove,
    oracle_min_entropy,
)
from hill.experiments import DEFAULT_VOCAB, default_dataset, k_sweep, run_training
from hill.graph import build_graph
from hill.hill_model import (
    HillConfig,
    HillModel,
    bce_backward,
    bce_loss,
    nt_xent,
    nt_xent_backward,
)
from hill.metrics import macro_f1, micro_f1

from conftest import random_graph
from test_metrics import confusion_f1_oracle


def report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] acceptance {number}: {name}{suffix}", file=sys.__stdout__)
    assert ok, f"acceptance {number} ({name}) failed: {detail}"


@pytest.fixture(scope="session")
def default_data():
    return default_dataset()


def test_acceptance_1_golden_entropy_values():
    start = time.perf_counter()
    rng = np.random.default_rng(100)
    worst = 0.0
    for _ in range(20):
        g = random_graph(rng)
        flat = initial_tree(g).structural_entropy()
        vol = g.volume
        shannon = -sum(d / vol * math.log2(d / vol) for d in g.degree)
        worst = max(worst, abs(flat - shannon))
    cycle4 = build_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    edge = build_graph(2, [(0, 1)])
    ok = (
        worst <= 1e-9
        and initial_tree(cycle4).structural_entropy() == 2.0
        and initial_tree(edge).structural_entropy() == 1.0
    )
    elapsed = time.perf_counter() - start
    report(
        1,
        "flat-tree entropy equals degree Shannon entropy",
        ok and elapsed < 1.0,
        f"max abs err {worst:.2e}, {elapsed:.2f}s",
    )


def test_acceptance_2_oracle_bound():
    start = time.perf_counter()
    rng = np.random.default_rng(200)
    gaps = []
    ok = True
    for _ in range(50):
        g = random_graph(rng, n_min=4, n_max=8)
        flat = initial_tree(g).structural_entropy()
        greedy = build_coding_tree(g, 2).structural_entropy()
        _, optimal = oracle_min_entropy(g, 2)
        if greedy < optimal - 1e-9 or greedy > flat + 1e-9:
            ok = False
        gaps.append(greedy - optimal)
    elapsed = time.perf_counter() - start
    report(
        2,
        "oracle <= greedy <= flat on 50 graphs",
        ok and elapsed < 120.0,
        f"mean greedy gap {np.mean(gaps):.4f} bits, {elapsed:.1f}s",
    )


def test_acceptance_3_community_recovery(bridge_triangles):
    start = time.perf_counter()
    greedy = build_coding_tree(bridge_triangles, 2)
    _, optimal = oracle_min_entropy(bridge_triangles, 2)
    groups = {greedy.nodes[c].subset for c in greedy.nodes[greedy.root_id].children}
    ok = (
        abs(greedy.structural_entropy() - optimal) <= 1e-12
        and groups == {frozenset({0, 1, 2}), frozenset({3, 4, 5})}
    )
    elapsed = time.perf_counter() - start
    report(3, "greedy recovers the two triangles optimally", ok and elapsed < 1.0, f"{elapsed:.2f}s")


def test_acceptance_4_cache_and_delta_coherence():
    rng = np.random.default_rng(400)
    worst_cache = 0.0
    worst_delta = 0.0
    for _ in range(1000):
        g = random_graph(rng, n_min=4, n_max=8)
        tree = initial_tree(g)
        for _ in range(int(rng.integers(3, 7))):
            op = rng.choice(["compress", "remove", "align", "merge"])
            internal = [
                n.id
                for n in tree.nodes.values()
                if not n.is_leaf() and len(n.children) >= 2
            ]
            if op == "compress":
                parent = tree.nodes[int(rng.choice(internal))]
                a, b = rng.choice(parent.children, size=2, replace=False)
                before = tree.structural_entropy()
                predicted = delta_compress(tree, int(a), int(b))
                tree.compress(int(a), int(b))
                worst_delta = max(
                    worst_delta, abs(tree.structural_entropy() - before - predicted)
                )
            elif op == "remove":
                removable = [
                    n.id for n in tree.nodes.values() if n.parent is not None and not n.is_leaf()
                ]
                if not removable:
                    continue
                v = int(rng.choice(removable))
                before = tree.structural_entropy()
                predicted = delta_remove(tree, v)
                tree.remove_node(v)
                worst_delta = max(
                    worst_delta, abs(tree.structural_entropy() - before - predicted)
                )
            elif op == "align":
                tree.align()
            else:
                target = tree.nodes[int(rng.choice(internal))]
                if len(target.children) < 3 or any(
                    not tree.nodes[c].is_leaf() for c in target.children
                ):
                    continue
                tree.merge(target.id, build_two_level(tree, target.id))
            worst_cache = max(
                worst_cache, abs(tree.structural_entropy() - tree.entropy_from_scratch())
            )
    ok = worst_cache <= 1e-12 and worst_delta <= 1e-12
    report(
        4,
        "caches and deltas coherent over 1000 random surgery sequences",
        ok,
        f"max cache err {worst_cache:.2e}, max delta err {worst_delta:.2e}",
    )


def test_acceptance_5_tree_validity():
    rng = np.random.default_rng(500)
    checked = 0
    ok = True
    for _ in range(50):
        for k in (2, 3):
            g = random_graph(rng, n_min=5, n_max=9)
            tree = build_coding_tree(g, k)
            try:
                tree.validate()
            except ValueError:
                ok = False
            if tree.height != k:
                ok = False
            checked += 1
    report(5, "greedy trees valid with exact height", ok and checked == 100, f"{checked} trees")


def test_acceptance_6_gradient_correctness():
    rng = np.random.default_rng(600)

    # individual losses at 1e-6
    p = rng.uniform(0.05, 0.95, size=(4, 6))
    y = (rng.random((4, 6)) < 0.4).astype(float)
    _, ctx = bce_loss(p, y)
    bce_err = tn.max_rel_error(
        bce_backward(ctx), tn.central_difference(lambda v: bce_loss(v, y)[0], p.copy())
    )
    nt_err = 0.0
    for form in ("simclr", "paper_literal"):
        h = rng.normal(size=(5, 6))
        h_hat = rng.normal(size=(5, 6))
        _, ctx = nt_xent(h, h_hat, tau=0.7, form=form)
        gh, gh_hat = nt_xent_backward(ctx)
        num_h = tn.central_difference(
            lambda v: nt_xent(v, h_hat, 0.7, form)[0], h.copy(), step=1e-4
        )
        num_hh = tn.central_difference(
            lambda v: nt_xent(h, v, 0.7, form)[0], h_hat.copy(), step=1e-4
        )
        nt_err = max(
            nt_err,
            tn.max_rel_error(gh, num_h, floor=1e-6),
            tn.max_rel_error(gh_hat, num_hh, floor=1e-6),
        )

    # layer ops at 1e-6
    op_err = 0.0
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 3))
    grad = rng.normal(size=(3, 3))
    ga, gb = tn.matmul_backward(grad, a, b)
    op_err = max(
        op_err,
        tn.max_rel_error(
            ga, tn.central_difference(lambda v: float(np.sum(tn.matmul(v, b) * grad)), a.copy())
        ),
        tn.max_rel_error(
            gb, tn.central_difference(lambda v: float(np.sum(tn.matmul(a, v) * grad)), b.copy())
        ),
    )
    x = rng.normal(size=(3, 3)) + 0.05
    op_err = max(
        op_err,
        tn.max_rel_error(
            tn.relu_backward(grad, x),
            tn.central_difference(lambda v: float(np.sum(tn.relu(v) * grad)), x.copy()),
        ),
        tn.max_rel_error(
            tn.sigmoid_backward(grad, tn.sigmoid(x)),
            tn.central_difference(lambda v: float(np.sum(tn.sigmoid(v) * grad)), x.copy()),
        ),
    )

    # end-to-end composite loss on >= 200 sampled parameters at 1e-4
    from hill.datagen import gen_corpus, gen_hierarchy, hierarchy_to_graph

    hier = gen_hierarchy(2, 2, 0)
    config = HillConfig(d_B=8, d_V=4, K=2, lambda_clr=0.3, batch_size=4, seed=1)
    tree = build_coding_tree(hierarchy_to_graph(hier), 2)
    model = HillModel(config, 32, hier.num_labels, tree)
    docs = gen_corpus(hier, 4, 32, seed=1)
    counts = count_matrix(docs, 32)
    y01 = label_matrix(docs, hier.num_labels)
    model.zero_grad()
    _, _, ctx = model.forward_batch(counts, y01)
    model.backward(ctx)
    sampled = 0
    e2e_err = 0.0
    for param in model.parameters():
        flat = param.value.ravel()
        take = min(16, flat.size)
        for idx in rng.choice(flat.size, size=take, replace=False):
            orig = flat[idx]
            flat[idx] = orig + 1e-5
            hi, _, _ = model.forward_batch(counts, y01)
            flat[idx] = orig - 1e-5
            lo, _, _ = model.forward_batch(counts, y01)
            flat[idx] = orig
            numeric = (hi - lo) / 2e-5
            e2e_err = max(e2e_err, tn.max_rel_error([param.grad.ravel()[idx]], [numeric]))
            sampled += 1
    ok = bce_err < 1e-6 and nt_err < 1e-6 and op_err < 1e-6 and sampled >= 200 and e2e_err < 1e-4
    report(
        6,
        "analytic gradients match finite differences",
        ok,
        f"bce {bce_err:.1e}, ntxent {nt_err:.1e}, ops {op_err:.1e}, "
        f"end-to-end {e2e_err:.1e} over {sampled} params",
    )


def test_acceptance_7_learning_sanity(default_data):
    start = time.perf_counter()
    hierarchy, train_docs, dev_docs = default_data
    base = HillConfig()
    ok = True
    details = []
    for seed in (42, 43, 44):
        _, rep_with = run_training(
            replace(base, lambda_clr=0.1, seed=seed), hierarchy, train_docs, dev_docs
        )
        _, rep_without = run_training(
            replace(base, lambda_clr=0.0, seed=seed), hierarchy, train_docs, dev_docs
        )
        macro_with = rep_with[-1]["dev_macro_f1"]
        macro_without = rep_without[-1]["dev_macro_f1"]
        if macro_with < macro_without - 0.02:
            ok = False
        details.append(f"seed {seed}: {macro_with:.3f} vs {macro_without:.3f}")
        if seed == 42:
            micro = rep_with[-1]["dev_micro_f1"]
            ratio = rep_with[-1]["train_loss"] / rep_with[0]["train_loss"]
            if micro < 0.90 or ratio > 0.50:
                ok = False
            details.insert(0, f"micro {micro:.3f}, loss ratio {ratio:.2f}")
    elapsed = time.perf_counter() - start
    report(
        7,
        "default training learns and the contrastive term does not harm",
        ok and elapsed < 600.0,
        "; ".join(details) + f"; {elapsed:.0f}s",
    )


def test_acceptance_8_hyperparameter_echo(default_data):
    for k in (2, 3):
        for lam in (0.001, 0.1, 0.3):
            for eta in ("sum", "mean"):
                HillConfig(K=k, lambda_clr=lam, eta=eta)
    hierarchy, train_docs, dev_docs = default_data
    base = HillConfig(epochs=8)
    results = k_sweep(base, (2, 3, 4, 5), hierarchy, train_docs, dev_docs)
    macros = {k: r["dev_macro_f1"] for k, r in results.items()}
    best_k = max(macros, key=lambda k: macros[k])
    non_monotone = any(macros[k] < macros[best_k] for k in macros if k > best_k)
    detail = ", ".join(f"k={k}: {macros[k]:.3f}" for k in sorted(macros))
    report(8, "dev Macro-F1 is not monotone in tree height", non_monotone, detail)


def test_acceptance_9_metrics_oracle():
    rng = np.random.default_rng(900)
    exact = True
    for _ in range(1000):
        label_count = int(rng.integers(2, 12))
        n = int(rng.integers(1, 25))
        preds = [
            {int(y) for y in np.nonzero(rng.random(label_count) < 0.3)[0]} for _ in range(n)
        ]
        golds = [
            {int(y) for y in np.nonzero(rng.random(label_count) < 0.3)[0]} for _ in range(n)
        ]
        micro_ref, macro_ref = confusion_f1_oracle(preds, golds, label_count)
        if micro_f1(preds, golds) != micro_ref or macro_f1(preds, golds, label_count) != macro_ref:
            exact = False
    report(9, "F1 metrics agree exactly with the confusion-matrix oracle", exact, "1000 sets")
