"""Acceptance gate: each test enforces one release criterion at its stated
tolerance and prints a PASS/FAIL line that survives pytest's capture."""

import itertools
import json
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest
import scipy.stats

from gwselect.baselines import Metric, cca_score, mutual_nn_score, rsa_score
from gwselect.cli import main
from gwselect.embed_io import EmbeddingSet, Modality, write_embeddings
from gwselect.gw_core import (
    GwConfig,
    PenaltyKind,
    gw_discrepancy,
    gw_gradient,
    solve_gw,
)
from gwselect.linear_ot import (
    Coupling,
    Permutation,
    brute_force_lap,
    coupling_from_permutation,
    product_coupling,
    solve_linear_ot,
)
from gwselect.mmspace import DistanceMatrix, median_scale_match, pairwise_angular
from gwselect.selection import EncoderEntry, SelectionConfig, score_pool
from gwselect.theory_check import run_sweep

from conftest import random_distance_matrix, random_doubly_stochastic
from test_gw_core import discrepancy_oracle

PENALTIES = [PenaltyKind.ABS_L1, PenaltyKind.SQUARED_L2]


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", file=sys.__stdout__)
        raise
    print(f"ACCEPTANCE {name}: PASS", file=sys.__stdout__)


def test_gw_oracle_equivalence():
    with criterion("gw-oracle-equivalence"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        sizes = [2, 3, 4, 5] * 25
        for trial, n in enumerate(sizes):
            a = random_distance_matrix(n, seed=3 * trial + 1)
            b = random_distance_matrix(n, seed=3 * trial + 2)
            perms = list(itertools.permutations(range(n)))
            vertex_values = [
                gw_discrepancy(coupling_from_permutation(Permutation(p)), a, b)
                for p in perms
            ]
            starts = [coupling_from_permutation(Permutation(p)) for p in perms]
            starts.append(product_coupling(n))
            result = solve_gw(a, b, GwConfig(max_iters=100), initial_couplings=starts)
            assert result.value <= min(vertex_values) + 1e-9
            pi = random_doubly_stochastic(n, rng)
            direct = discrepancy_oracle(pi.weights, a.values, b.values, PenaltyKind.ABS_L1)
            assert gw_discrepancy(pi, a, b) == pytest.approx(direct, abs=1e-10)
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_isometry_zero():
    with criterion("isometry-zero"):
        t0 = time.perf_counter()
        for seed, n in [(0, 6), (1, 6), (2, 5), (3, 4), (4, 6)]:
            r = np.random.default_rng(seed)
            pts = r.standard_normal((n, 5))
            a = DistanceMatrix(values=pairwise_angular(pts))
            perm = r.permutation(n)
            b = DistanceMatrix(values=a.values[np.ix_(perm, perm)])
            result = solve_gw(a, b, GwConfig(restarts=10, seed=seed))
            assert result.value <= 1e-9
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"took {elapsed:.1f}s"


def test_monotone_traces():
    with criterion("monotone-traces"):
        violations = 0
        rng = np.random.default_rng(5150)
        for trial in range(20):
            n = int(rng.integers(4, 11))
            a = random_distance_matrix(n, seed=7 * trial + 3)
            b = random_distance_matrix(n, seed=7 * trial + 4)
            for penalty in PENALTIES:
                result = solve_gw(
                    a, b, GwConfig(restarts=4, seed=trial, penalty=penalty)
                )
                objs = [obj for _, obj, _ in result.trace]
                violations += sum(
                    1 for i in range(len(objs) - 1) if objs[i + 1] > objs[i]
                )
        assert violations == 0


def test_gradient_finite_differences():
    with criterion("gradient-check"):
        h = 1e-6
        rng = np.random.default_rng(808)
        for penalty in PENALTIES:
            for trial in range(50):
                n = int(rng.integers(3, 7))
                a = random_distance_matrix(n, seed=trial + 100)
                b = random_distance_matrix(n, seed=trial + 200)
                pi = random_doubly_stochastic(n, rng)
                delta = (
                    random_doubly_stochastic(n, rng).weights
                    - random_doubly_stochastic(n, rng).weights
                )
                analytic = float(np.vdot(gw_gradient(pi, a, b, penalty), delta))
                plus = Coupling(weights=pi.weights + h * delta)
                minus = Coupling(weights=pi.weights - h * delta)
                fd = (
                    gw_discrepancy(plus, a, b, penalty)
                    - gw_discrepancy(minus, a, b, penalty)
                ) / (2 * h)
                assert abs(analytic - fd) <= 1e-5 * max(abs(analytic), 1e-10)


def test_linear_ot_exactness():
    with criterion("linear-ot-exactness"):
        rng = np.random.default_rng(31337)
        for trial in range(100):
            n = int(rng.integers(2, 9))
            cost = rng.uniform(0.0, 4.0, size=(n, n))
            _, fast = solve_linear_ot(cost)
            _, exact = brute_force_lap(cost)
            assert abs(fast - exact) <= 1e-12


def test_scale_matching():
    with criterion("scale-matching"):
        rng = np.random.default_rng(4711)
        for trial in range(100):
            n = int(rng.integers(3, 12))
            pairs = n * (n - 1) // 2

            def sym(upper):
                m = np.zeros((n, n))
                iu = np.triu_indices(n, k=1)
                m[iu] = upper
                return DistanceMatrix(values=m + m.T)

            src = sym(rng.uniform(0.1, 2.5, pairs))
            tgt = sym(rng.uniform(0.1, 2.5, pairs))
            res = median_scale_match(src, tgt)
            iu = np.triu_indices(n, k=1)
            vals = sorted(res.scaled.values[iu])
            k = len(vals)
            med = vals[k // 2] if k % 2 else 0.5 * (vals[k // 2 - 1] + vals[k // 2])
            assert med == pytest.approx(res.target_median, rel=1e-12)
            again = median_scale_match(res.scaled, tgt)
            assert again.scale == pytest.approx(1.0, rel=1e-12)


def test_bound_sweep_two_hundred():
    with criterion("bound-sweep-200"):
        t0 = time.perf_counter()
        records = run_sweep(200, seed=90210)
        holders = sum(1 for r in records if r["holds"])
        assert holders == 200, f"only {holders}/200 instances satisfied both bounds"
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_baseline_identities_and_invariances():
    with criterion("baseline-identities"):
        rng = np.random.default_rng(777)
        ids = tuple(f"p{i}" for i in range(256))
        base = rng.standard_normal((256, 8))
        v = EmbeddingSet(ids=ids, modality=Modality.VISION, data=base.astype(np.float32))
        v_as_text = EmbeddingSet(ids=ids, modality=Modality.TEXT, data=v.data)
        assert rsa_score(v, v_as_text).value == pytest.approx(1.0, abs=1e-12)
        assert mutual_nn_score(v, v_as_text, k=10).value == 1.0

        q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        t_orth = EmbeddingSet(
            ids=ids, modality=Modality.TEXT,
            data=(base @ q).astype(np.float32),
        )
        assert cca_score(v, t_orth, components=8).value >= 0.999

        t = EmbeddingSet(
            ids=ids, modality=Modality.TEXT,
            data=rng.standard_normal((256, 8)).astype(np.float32),
        )
        rsa_base = rsa_score(v, t).value
        nn_base = mutual_nn_score(v, t, k=10).value
        q2, _ = np.linalg.qr(np.random.default_rng(101).standard_normal((8, 8)))
        v_rot = EmbeddingSet(
            ids=ids, modality=Modality.VISION,
            data=(3.7 * (v.data.astype(np.float64) @ q2)).astype(np.float32),
        )
        assert rsa_score(v_rot, t).value == pytest.approx(rsa_base, abs=1e-9)
        assert mutual_nn_score(v_rot, t, k=10).value == pytest.approx(nn_base, abs=1e-9)

        perm = np.random.default_rng(55).permutation(256)
        ids_p = tuple(ids[i] for i in perm)
        v_p = EmbeddingSet(ids=ids_p, modality=Modality.VISION, data=v.data[perm])
        t_p = EmbeddingSet(ids=ids_p, modality=Modality.TEXT, data=t.data[perm])
        assert mutual_nn_score(v_p, t_p, k=10).value == pytest.approx(nn_base, abs=1e-9)


def test_end_to_end_ranking_recovery(tmp_path):
    with criterion("ranking-recovery"):
        sigmas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.45]
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n, d = 48, 12
            ids = tuple(f"s{i:03d}" for i in range(n))
            text_data = rng.standard_normal((n, d))
            text = EmbeddingSet(ids=ids, modality=Modality.TEXT,
                                data=text_data.astype(np.float32))
            pool = []
            pool_dir = tmp_path / f"seed{seed}"
            pool_dir.mkdir()
            for k, sigma in enumerate(sigmas):
                q, _ = np.linalg.qr(rng.standard_normal((d, d)))
                vis = text_data @ q + sigma * rng.standard_normal((n, d))
                emb = EmbeddingSet(ids=ids, modality=Modality.VISION,
                                   data=vis.astype(np.float32))
                path = pool_dir / f"enc{k}.emb"
                write_embeddings(emb, path)
                pool.append(EncoderEntry(name=f"enc{k}", embedding_path=str(path)))
            report = score_pool(
                pool, text, Metric.GW,
                SelectionConfig(gw=GwConfig(restarts=8, seed=seed)),
            )
            by_name = {name: score for name, score, _ in report.rows}
            values = [by_name[f"enc{k}"] for k in range(len(sigmas))]
            rho = scipy.stats.spearmanr(values, list(range(len(sigmas)))).statistic
            assert rho >= 0.9, f"seed {seed}: spearman {rho}"


def test_rank_determinism(tmp_path):
    with criterion("rank-determinism"):
        rng = np.random.default_rng(9)
        n, d = 26, 6
        ids = tuple(f"s{i:03d}" for i in range(n))
        text_data = rng.standard_normal((n, d))
        write_embeddings(
            EmbeddingSet(ids=ids, modality=Modality.TEXT,
                         data=text_data.astype(np.float32)),
            tmp_path / "text.emb",
        )
        manifest = []
        for k, sigma in enumerate([0.0, 0.2, 0.5]):
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            vis = text_data @ q + sigma * rng.standard_normal((n, d))
            write_embeddings(
                EmbeddingSet(ids=ids, modality=Modality.VISION,
                             data=vis.astype(np.float32)),
                tmp_path / f"enc{k}.emb",
            )
            manifest.append({"name": f"enc{k}", "embedding_path": f"enc{k}.emb"})
        (tmp_path / "pool.json").write_text(json.dumps(manifest))
        argv = ["rank", "--pool", str(tmp_path / "pool.json"),
                "--text", str(tmp_path / "text.emb"), "--metric", "gw",
                "--restarts", "3"]
        assert main(argv + ["--out", str(tmp_path / "r1.json")]) == 0
        assert main(argv + ["--out", str(tmp_path / "r2.json")]) == 0
        b1 = (tmp_path / "r1.json").read_bytes()
        b2 = (tmp_path / "r2.json").read_bytes()
        assert b1 == b2 and len(b1) > 0


def test_efficiency_bench_n1000(tmp_path):
    with criterion("efficiency-n1000"):
        out = tmp_path / "bench.csv"
        t0 = time.perf_counter()
        rc = main(["bench", "--sizes", "1000", "--penalty", "l2",
                   "--iters", "1000", "--out", str(out)])
        elapsed = time.perf_counter() - t0
        assert rc == 0
        assert elapsed <= 300.0, f"took {elapsed:.1f}s"
        lines = out.read_text().splitlines()
        assert lines[0] == "n,phase,seconds,penalty,iters"
        assert any(line.startswith("1000,solve,") for line in lines)
