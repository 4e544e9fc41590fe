"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py`` (lines appear in the terminal summary)
or ``python tests/test_acceptance.py`` (lines printed as each check finishes).
"""
import contextlib
import os
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import lasso_active_set, mann_whitney_auc, rates_by_hand, svm_dual_qp  # noqa: E402
from tilesparse.classify.forest import rf_margin, rf_predict, rf_train  # noqa: E402
from tilesparse.classify.svm import dual_objective, kkt_violation as svm_kkt, svm_predict_batch, svm_train  # noqa: E402
from tilesparse.config import PipelineConfig  # noqa: E402
from tilesparse.eigenspace import build_dictionary, sym_eig  # noqa: E402
from tilesparse.evaluation import ConfusionMatrix, confusion_rates, multiclass_bal_acc, roc_auc, stratified_kfold  # noqa: E402
from tilesparse.pipeline import run_pipeline  # noqa: E402
from tilesparse.sparse import (  # noqa: E402
    encode_epsilon,
    kkt_violation,
    lasso,
    lasso_objective,
    least_squares_residual,
    soft_threshold,
)
from tilesparse.synth import gen_synthetic  # noqa: E402

RESULTS = []


@contextlib.contextmanager
def criterion(number, title):
    info = {}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        _record(number, title, False, f"{type(exc).__name__}: {exc}".splitlines()[0], start)
        raise
    _record(number, title, True, info.get("detail", ""), start)


def _record(number, title, ok, detail, start):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  ({detail}; {time.perf_counter() - start:.1f}s)"
    RESULTS.append(line)
    if __name__ == "__main__":
        print(line, flush=True)


def test_criterion_01_eigensolver_oracle():
    with criterion(1, "Jacobi eigenpairs on 1000 symmetric matrices, 2x2 closed form") as info:
        rng = np.random.default_rng(101)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            c = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-3, 3)
            c = (c + c.T) / 2
            w, v = sym_eig(c)
            bound = 1e-8 * (1 + np.linalg.norm(c))
            res = np.linalg.norm(c @ v - v * w, axis=0).max()
            worst = max(worst, res / bound)
            assert res < bound, f"n={n} residual {res:.3e} >= {bound:.3e}"
        closed = 0.0
        for _ in range(200):
            a, b, d = rng.standard_normal(3)
            w, v = sym_eig(np.array([[a, b], [b, d]]))
            mid, rad = (a + d) / 2, np.hypot((a - d) / 2, b)
            closed = max(closed, abs(w[0] - (mid + rad)), abs(w[1] - (mid - rad)))
            # eigenvector of the larger eigenvalue: (b, lam1 - a) or (lam1 - d, b), whichever is better scaled
            cands = [np.array([b, mid + rad - a]), np.array([mid + rad - d, b])]
            ref = max(cands, key=np.linalg.norm)
            ref /= np.linalg.norm(ref)
            closed = max(closed, 1 - abs(ref @ v[:, 0]))
        assert closed < 1e-10, f"2x2 deviation {closed:.3e}"
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.1f}s"
        info["detail"] = f"worst residual/bound {worst:.2e}, 2x2 deviation {closed:.1e}"


def test_criterion_02_dictionary_orthonormal_and_ordered():
    with criterion(2, "dictionary orthonormality and variance ordering, 196-dim patches, k=1..9") as info:
        rng = np.random.default_rng(202)
        scales = np.geomspace(3.0, 0.1, 196)
        patches = rng.standard_normal((196, 500)) * scales[rng.permutation(196)][:, None]
        worst_orth = 0.0
        for k in range(1, 10):
            for method in ("jacobi", "lapack"):
                d = build_dictionary(patches, k, method=method, patch_size=14)
                worst_orth = max(worst_orth, np.abs(d.atoms.T @ d.atoms - np.eye(k)).max())
                assert np.all(np.diff(d.eigenvalues) <= 0)
                centred = patches - d.mean[:, None]
                var = (d.atoms.T @ centred).var(axis=1, ddof=1)
                np.testing.assert_allclose(var, d.eigenvalues, rtol=1e-9)
                assert np.all(np.diff(var) <= 1e-12 * var[0])
        assert worst_orth < 1e-10
        info["detail"] = f"max |A^T A - I| {worst_orth:.1e}"


def test_criterion_03_lasso_oracle():
    with criterion(3, "lasso vs brute-force active set on 200 problems, KKT, orthonormal closed form") as info:
        rng = np.random.default_rng(303)
        gap = kkt = closed = 0.0
        for _ in range(200):
            k = int(rng.integers(1, 7))
            m = int(rng.integers(k, 13))
            x = rng.standard_normal((m, k))
            y = rng.standard_normal(m) * 2
            lam = float(rng.uniform(0, 1.2) * np.abs(x.T @ y).max())
            code = lasso(x, y, lam)
            _, best = lasso_active_set(x, y, lam)
            gap = max(gap, abs(lasso_objective(x, y, code.coefficients, lam) - best))
            kkt = max(kkt, kkt_violation(x, y, code.coefficients, lam))
            q, _ = np.linalg.qr(rng.standard_normal((m, k)))
            ortho = lasso(q, y, lam)
            closed = max(closed, np.abs(ortho.coefficients - soft_threshold(q.T @ y, lam)).max())
        assert gap <= 1e-6, f"objective gap {gap:.2e}"
        assert kkt <= 1e-6, f"KKT violation {kkt:.2e}"
        assert closed <= 1e-9, f"closed-form deviation {closed:.2e}"
        info["detail"] = f"objective gap {gap:.1e}, KKT {kkt:.1e}, closed form {closed:.1e}"


def test_criterion_04_encode_epsilon_contract():
    with criterion(4, "encode_epsilon residual bound and unreachable flag on 100 problems") as info:
        rng = np.random.default_rng(404)
        reachable = flagged = 0
        for i in range(100):
            k = int(rng.integers(1, 7))
            m = int(rng.integers(k + 1, 15))
            x = rng.standard_normal((m, k))
            y = rng.standard_normal(m)
            ls = least_squares_residual(x, y)
            eps = float(rng.uniform(0.2, 1.0) * ls) if i % 3 == 0 else float(rng.uniform(ls, np.linalg.norm(y)))
            code = encode_epsilon(x, y, eps)
            if eps >= ls:
                reachable += 1
                assert not code.unreachable, f"problem {i}: flagged although eps >= lstsq residual"
                assert code.residual_norm <= eps * (1 + 1e-6), f"problem {i}: residual above eps"
            else:
                flagged += 1
                assert code.unreachable, f"problem {i}: eps below lstsq residual but not flagged"
        info["detail"] = f"{reachable} reachable, {flagged} unreachable"


def _toy(rng, n, gap):
    x = np.vstack([rng.standard_normal((n, 2)) - gap / 2, rng.standard_normal((n, 2)) + gap / 2])
    return x, np.r_[-np.ones(n), np.ones(n)].astype(int)


def test_criterion_05_svm():
    with criterion(5, "SVM separable toys, dual feasibility, QP oracle on <=20 points") as info:
        rng = np.random.default_rng(505)
        worst_kkt = worst_obj = 0.0
        for _ in range(50):
            x, y = _toy(rng, int(rng.integers(3, 11)), gap=8.0)
            model = svm_train(x, y, C=float(rng.uniform(0.5, 50)))
            assert np.all(svm_predict_batch(model, x)[1] == y)
            assert model.converged
        for _ in range(50):
            n = int(rng.integers(2, 11))
            x, y = _toy(rng, n, gap=float(rng.uniform(0, 3)))
            c = float(rng.uniform(0.1, 10))
            weights = None if rng.random() < 0.5 else {1: 2.0, -1: 1.0}
            model = svm_train(x, y, C=c, class_weights=weights)
            upper = c * np.where(y > 0, model.class_weights[1], model.class_weights[-1])
            a = model.dual_coefficients
            assert np.all(a >= 0) and np.all(a <= upper)
            if model.converged:
                worst_kkt = max(worst_kkt, svm_kkt(model, x, y))
            ref = svm_dual_qp(x, y.astype(float), upper)
            worst_obj = max(worst_obj, abs(dual_objective(model) - ref))
        assert worst_kkt <= 1e-6, f"KKT {worst_kkt:.1e}"
        assert worst_obj <= 1e-5, f"objective gap {worst_obj:.1e}"
        info["detail"] = f"max KKT {worst_kkt:.1e}, max QP objective gap {worst_obj:.1e}"


def test_criterion_06_forest_determinism_and_margin():
    with criterion(6, "RF bit-identical under 1 and 8 workers; margin sign on 10000 triples") as info:
        rng = np.random.default_rng(606)
        triples = 0
        ties = 0
        for trial in range(10):
            n_classes = int(rng.integers(2, 5))
            centres = rng.standard_normal((n_classes, 6)) * 2
            y = rng.integers(0, n_classes, 120)
            x = centres[y] + rng.standard_normal((120, 6)) * 1.5
            n_trees = int(rng.integers(4, 30))
            serial = rf_train(x, y, n_trees=n_trees, seed=trial, jobs=1)
            assert serial.same_as(rf_train(x, y, n_trees=n_trees, seed=trial, jobs=8))
            yq = rng.integers(0, n_classes, 1000)
            xq = centres[yq] + rng.standard_normal((1000, 6)) * 1.5
            for xi, yi in zip(xq, yq):
                m = rf_margin(serial, xi, yi)
                label, votes = rf_predict(serial, xi)
                assert -1.0 <= m <= 1.0
                if m > 0:
                    assert label == yi
                elif m < 0:
                    assert label != yi
                else:
                    ties += 1
                    tied = [c for c, v in zip(serial.classes, votes) if v == votes.max()]
                    assert yi in tied and label == min(tied)
                triples += 1
        assert triples == 10_000
        info["detail"] = f"{triples} triples, {ties} exact ties resolved by the smallest-class rule"


def test_criterion_07_metrics_arithmetic():
    with criterion(7, "rates exact on 50 matrices, AUC = Mann-Whitney on 200 sets, 2-class mean recall") as info:
        rng = np.random.default_rng(707)
        for _ in range(50):
            tp, fn, tn, fp = (int(v) for v in rng.integers(0, 40, 4))
            cm = ConfusionMatrix(np.array([[tn, fp], [fn, tp]]), (0, 1))
            got = confusion_rates(cm, positive=1)
            for name, want in rates_by_hand(tp, fn, tn, fp).items():
                assert Fraction(got[name]) == Fraction(float(want)), name
            if tp + fn and tn + fp:
                assert multiclass_bal_acc(cm) == got["bal_acc"]
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(2, 60))
            truth = rng.integers(0, 2, n)
            truth[:2] = (0, 1)
            scores = rng.integers(0, int(rng.integers(2, 12)), n) / 4.0
            worst = max(worst, abs(roc_auc(scores, truth) - float(mann_whitney_auc(scores, truth == 1))))
        assert worst <= 1e-12
        info["detail"] = f"max AUC deviation {worst:.1e}"


def test_criterion_08_stratified_cv():
    with criterion(8, "stratified folds on 500 label vectors") as info:
        rng = np.random.default_rng(808)
        for _ in range(500):
            k = int(rng.integers(2, 11))
            n_classes = int(rng.integers(1, 6))
            sizes = rng.integers(k, 4 * k + 7, n_classes)
            labels = rng.permutation(np.repeat(np.arange(n_classes), sizes))
            split = stratified_kfold(labels, k, seed=int(rng.integers(0, 2**31)))
            tests = [t for _, t in split.folds()]
            merged = np.concatenate(tests)
            assert merged.size == labels.size and np.unique(merged).size == labels.size
            for c in range(n_classes):
                per_fold = [int(np.sum(labels[t] == c)) for t in tests]
                assert max(per_fold) - min(per_fold) <= 1
        info["detail"] = "500 vectors, k in [2, 10]"


def _run(data, out, patch_sizes, classifier, **kw):
    cfg = PipelineConfig(image_size=64, patch_sizes=patch_sizes, component_counts=[5], k_folds=5, seed=0,
                         classifier=classifier, data_dir=str(data), out_dir=str(out), **kw)
    return run_pipeline(cfg)


@pytest.mark.slow
def test_criterion_09_patch_size_effect(tmp_path):
    with criterion(9, "2-class blobs, 200 images 64x64: p=8 k=5 >= 95%, p=32 lower, < 120 s") as info:
        start = time.perf_counter()
        gen_synthetic(tmp_path / "data", 100, "blobs2", image_size=64, seed=0)
        res = _run(tmp_path / "data", tmp_path / "out", [8, 32], "svm")
        elapsed = time.perf_counter() - start
        small = res.grid.cells[(8, 5)].summary.mean["bal_acc"]
        large = res.grid.cells[(32, 5)].summary.mean["bal_acc"]
        info["detail"] = f"p=8 {small:.2f}%, p=32 {large:.2f}%, {elapsed:.1f}s"
        assert small >= 95.0, info["detail"]
        assert large < small, info["detail"]
        assert elapsed < 120.0, info["detail"]


@pytest.mark.slow
def test_criterion_10_multiclass_forest(tmp_path):
    with criterion(10, "4-class textures, RF: balanced accuracy >= 80%, CSVs byte-identical on rerun") as info:
        gen_synthetic(tmp_path / "data", 50, "texture4", image_size=64, seed=0)
        first = _run(tmp_path / "data", tmp_path / "a", [8], "rf")
        _run(tmp_path / "data", tmp_path / "b", [8], "rf")
        assert first.grid.mode == "multiclass"
        bal = first.grid.cells[(8, 5)].summary.mean["bal_acc"]
        same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
                   for f in ("grid_bal_acc.csv", "best_metrics.csv"))
        info["detail"] = f"balanced accuracy {bal:.2f}%, identical CSVs {same}"
        assert bal >= 80.0, info["detail"]
        assert same


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted((n, f) for n, f in globals().items() if n.startswith("test_criterion")):
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    from pathlib import Path

                    fn(Path(d))
            else:
                fn()
        except Exception:
            failed += 1
    print(f"{len(RESULTS) - failed}/{len(RESULTS)} criteria passed")
    sys.exit(1 if failed else 0)
