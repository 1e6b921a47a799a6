"""Acceptance suite: one test per release criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the verdict lines.

Two sub-checks of the reference-space criterion (sphere and the m=2
scale-free band) are infeasible under the pinned sampling protocol and
are expected to fail; see the companion qualitative test and the
project notes for the analysis.  Everything else must pass.
"""

import itertools
import time

import numpy as np
import pytest

from hyplora import (
    AdapterParams,
    CurvedSpace,
    TangentAtOrigin,
    build_model,
    delta_over_all_quadruples,
    estimate_delta,
    euclidean_lora_forward,
    exact_delta,
    exp_map_origin,
    fit_power_law,
    generate_hierarchical_dataset,
    generate_reference_graph,
    grad_check_model,
    graph_shortest_paths,
    hyplora_forward,
    lift_to_hyperboloid,
    llr_transform,
    log_map_origin,
    pairwise_euclidean,
    sample_sphere_metric,
    sample_zipf_counts,
    tangent_lora_forward,
    train,
)
from hyplora.lorentz import manifold_violation
from hyplora.tokenstats import FrequencyTable
from hyplora.toy import ToyModelConfig

K_GRID = (0.1, 0.5, 1.0, 2.0)


def verdict(ok: bool, name: str, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


class TestCancellationTheorem:
    def test_tangent_rule_collapses_and_hyperbolic_rule_does_not(self):
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        d = k = 32
        r = 4
        n_instances = 1000
        worst_tangent = 0.0
        hyp_deviating = 0
        hyp_total = 0
        for _ in range(n_instances):
            W = rng.normal(size=(d, k)) / np.sqrt(k)
            A = rng.normal(size=(r, k)) / np.sqrt(k)
            B = rng.normal(size=(d, r)) / np.sqrt(r)
            x = rng.normal(size=k)
            xhat = x / np.linalg.norm(x)
            for K in K_GRID:
                p = AdapterParams(W=W, A=A, B=B, rank=r, space=CurvedSpace(K, k))
                eu = euclidean_lora_forward(x, p)
                tg = tangent_lora_forward(x, p)
                worst_tangent = max(
                    worst_tangent,
                    float(np.linalg.norm(tg - eu) / np.linalg.norm(eu)),
                )
                ba = p.B @ (p.A @ xhat)
                delta = hyplora_forward(x, p) - p.W @ x
                hyp_total += 1
                if np.linalg.norm(delta - ba) > 1e-3 * np.linalg.norm(ba):
                    hyp_deviating += 1
        elapsed = time.perf_counter() - start
        frac = hyp_deviating / hyp_total
        ok = worst_tangent <= 1e-6 and frac >= 0.95 and elapsed < 10.0
        verdict(ok, "cancellation-theorem",
                f"max tangent deviation {worst_tangent:.2e} (<=1e-6), "
                f"hyperbolic deviation >1e-3 on {frac:.1%} (>=95%), {elapsed:.1f}s (<10s)")
        assert worst_tangent <= 1e-6
        assert frac >= 0.95
        assert elapsed < 10.0


class TestManifoldRoundTrip:
    def test_constraint_and_inversion(self):
        start = time.perf_counter()
        rng = np.random.default_rng(7)
        cases = 10_000
        worst_violation = 0.0
        worst_roundtrip = 0.0
        for i in range(cases):
            K = K_GRID[i % 4]
            sp = CurvedSpace(K, 6)
            rk = sp.sqrt_k
            lifted = lift_to_hyperboloid(rng.normal(size=6) * rng.uniform(0, 10) * rk, sp)
            worst_violation = max(worst_violation, manifold_violation(lifted, sp))
            direction = rng.normal(size=6)
            direction /= np.linalg.norm(direction)
            v = TangentAtOrigin(direction * rng.uniform(0, 5.0) * rk)
            point = exp_map_origin(v, sp)
            worst_violation = max(worst_violation, manifold_violation(point, sp))
            A = rng.normal(size=(3, 6)) / np.sqrt(6)
            B = rng.normal(size=(6, 3)) / np.sqrt(3)
            z = llr_transform(A, B, point, "rotation", sp)
            worst_violation = max(worst_violation, manifold_violation(z, sp))
            back = log_map_origin(point, sp)
            worst_roundtrip = max(
                worst_roundtrip, float(np.abs(back.space - v.space).max())
            )
        elapsed = time.perf_counter() - start
        ok = worst_violation <= 1e-9 and worst_roundtrip <= 1e-8 and elapsed < 5.0
        verdict(ok, "manifold-roundtrip",
                f"constraint {worst_violation:.2e} (<=1e-9), "
                f"log(exp) error {worst_roundtrip:.2e} (<=1e-8), "
                f"{cases} cases in {elapsed:.1f}s (<5s)")
        assert worst_violation <= 1e-9
        assert worst_roundtrip <= 1e-8
        assert elapsed < 5.0


class TestTaylorOrder:
    def test_residual_ratio_decays_100x_per_decade(self):
        # Adjusted per the decisions ledger: the surrogate carries the full
        # third-order coefficient (the published leading form omits the
        # logarithmic map's cubic and leaves a scale-independent ratio),
        # and the pinned 1e-4 point is probed in extended precision, which
        # the fifth-order residual requires.
        start = time.perf_counter()
        rng = np.random.default_rng(11)
        k = d = 16
        r = 2
        decades_ok = []
        details = []
        for trial in range(5):
            A = rng.normal(size=(r, k)) * (0.4 / np.sqrt(k))
            B = rng.normal(size=(d, r)) * (0.4 / np.sqrt(r))
            u = rng.normal(size=k)
            u /= np.linalg.norm(u)
            dt = np.longdouble
            Ad, Bd, ud = A.astype(dt), B.astype(dt), u.astype(dt)
            ba_u = Bd @ (Ad @ ud)
            c2 = float((ba_u * ba_u).sum())
            ratios = []
            for s in (dt(1e-2), dt(1e-3), dt(1e-4)):
                xhat = s * ud
                # Closed-form pipeline in extended precision.
                ps = np.sinh(s) * ud
                b = Bd @ (Ad @ ps)
                m = np.sqrt((b * b).sum())
                hyp = np.arcsinh(m) * b / m
                lin = s * ba_u
                third = (1 + (s * s) * (1 - c2) / 6) * lin
                ratios.append(float(
                    np.sqrt(((hyp - third) ** 2).sum())
                    / np.sqrt(((hyp - lin) ** 2).sum())
                ))
            drops = [ratios[0] / ratios[1], ratios[1] / ratios[2]]
            decades_ok.append(all(100 / 3 <= dr <= 100 * 3 for dr in drops))
            details.append(f"{drops[0]:.0f}x,{drops[1]:.0f}x")
        elapsed = time.perf_counter() - start
        ok = all(decades_ok) and elapsed < 5.0
        verdict(ok, "taylor-order",
                f"per-decade ratio drops [{'; '.join(details)}] "
                f"(each within 3x of 100x), {elapsed:.1f}s (<5s)")
        assert all(decades_ok)
        assert elapsed < 5.0


class TestReferenceSpaces:
    def test_table_reproduction_as_pinned(self):
        # Sphere and m=2 scale-free bands are infeasible under the pinned
        # uniform-quadruple protocol (see the decisions ledger); their
        # sub-checks fail here by design rather than being weakened.
        start = time.perf_counter()
        failures = []

        tree = generate_reference_graph("tree", 500, None, seed=5)
        res_tree = estimate_delta(graph_shortest_paths(tree), 1000, seed=123)
        ok = res_tree.delta_rel == 0.0
        verdict(ok, "table-ref/tree", f"delta_rel {res_tree.delta_rel} (= 0 exactly)")
        if not ok:
            failures.append("tree")

        sphere = sample_sphere_metric(2000, seed=7)
        res_sphere = estimate_delta(sphere, 1000, seed=123)
        ok = 0.90 <= res_sphere.delta_rel <= 1.00
        verdict(ok, "table-ref/sphere",
                f"delta_rel {res_sphere.delta_rel:.3f} (pinned band [0.90, 1.00]; "
                "uniform-quadruple sampling plateaus near 0.7)")
        if not ok:
            failures.append("sphere")

        sf = generate_reference_graph("scale_free", 500, {"m": 2}, seed=1)
        res_sf = estimate_delta(graph_shortest_paths(sf), 1000, seed=123)
        ok = res_sf.delta_rel <= 0.15
        verdict(ok, "table-ref/scale-free",
                f"delta_rel {res_sf.delta_rel:.3f} (pinned band <=0.15; m=2 graphs "
                "carry quadruples of delta 1.5)")
        if not ok:
            failures.append("scale_free")

        er = generate_reference_graph("random", 500, {"p": 0.02}, seed=1)
        res_er = estimate_delta(graph_shortest_paths(er), 1000, seed=123)
        ok = 0.28 <= res_er.delta_rel <= 0.96
        verdict(ok, "table-ref/random", f"delta_rel {res_er.delta_rel:.3f} (band [0.28, 0.96])")
        if not ok:
            failures.append("random")

        elapsed = time.perf_counter() - start
        verdict(elapsed < 60.0, "table-ref/runtime", f"{elapsed:.1f}s (<60s)")
        assert elapsed < 60.0
        assert not failures, (
            f"pinned reference bands unreachable under the pinned protocol: {failures}; "
            "see notes/decisions ledger (sphere needs ~0.5% seed luck, scale-free ~1e-26)"
        )

    def test_table_reproduction_desk_scale_companion(self):
        # Qualitative reproduction with protocol choices the estimator can
        # actually honor: exhaustive search for the sphere ceiling and the
        # tree-shaped (m=1) preferential-attachment graph.
        start = time.perf_counter()
        tree = generate_reference_graph("tree", 500, None, seed=5)
        res_tree = estimate_delta(graph_shortest_paths(tree), 1000, seed=123)
        assert res_tree.delta_rel == 0.0
        verdict(True, "table-companion/tree", "delta_rel 0.00 (reference 0.00)")

        sphere = sample_sphere_metric(130, seed=4)
        rel = 2.0 * exact_delta(sphere) / sphere.diameter()
        assert rel >= 0.90
        verdict(True, "table-companion/sphere-exhaustive",
                f"exact delta_rel {rel:.3f} >= 0.90 (reference 0.99 +- 0.01)")

        pa_tree = generate_reference_graph("scale_free", 500, {"m": 1}, seed=1)
        res_pa = estimate_delta(graph_shortest_paths(pa_tree), 1000, seed=123)
        assert res_pa.delta_rel == 0.0
        verdict(True, "table-companion/scale-free-tree",
                "m=1 attachment tree delta_rel 0.00 (reference 0.00)")

        er = generate_reference_graph("random", 500, {"p": 0.02}, seed=1)
        res_er = estimate_delta(graph_shortest_paths(er), 1000, seed=123)
        assert 0.28 <= res_er.delta_rel <= 0.96
        verdict(True, "table-companion/random",
                f"delta_rel {res_er.delta_rel:.3f} in [0.28, 0.96] (reference 0.62 +- 0.34)")
        assert time.perf_counter() - start < 60.0


class TestEstimatorOracle:
    def test_sampled_estimator_against_exhaustive(self):
        rng = np.random.default_rng(100)
        spaces = []
        for i in range(20):
            n = int(rng.integers(8, 31))
            dim = int(rng.integers(2, 6))
            spaces.append(pairwise_euclidean(rng.normal(size=(n, dim))))
        exact_matches = 0
        sampled_ok = 0
        for i, dm in enumerate(spaces):
            ex = exact_delta(dm)
            allsub = delta_over_all_quadruples(dm)
            if abs(ex - allsub) <= 1e-12:
                exact_matches += 1
            sampled = estimate_delta(dm, 1000, seed=55).delta
            if sampled >= 0.5 * ex:
                sampled_ok += 1
        ok = exact_matches == 20 and sampled_ok >= 18
        verdict(ok, "estimator-oracle",
                f"all-quadruple sweep == exhaustive on {exact_matches}/20, "
                f"1000-sample estimate >= half of exhaustive on {sampled_ok}/20 (>=18)")
        assert exact_matches == 20
        assert sampled_ok >= 18


class TestPowerLawRecovery:
    def test_known_exponents(self):
        x_min = 5
        errs = {}
        for gamma in (1.5, 1.9, 2.5):
            draws = sample_zipf_counts(gamma, x_min=x_min, size=100_000, seed=42)
            counts = {i: int(c) for i, c in enumerate(draws)}
            ft = FrequencyTable(counts=counts, total=int(draws.sum()))
            fit = fit_power_law(ft, x_min=x_min)
            errs[gamma] = abs(fit.gamma - gamma)
        ok = all(e <= 0.1 for e in errs.values())
        verdict(ok, "power-law-recovery",
                "; ".join(f"gamma {g}: |err| {e:.3f}" for g, e in errs.items()) + " (<=0.1)")
        assert all(e <= 0.1 for e in errs.values())


class TestGradientFidelity:
    def test_all_adapter_kinds_on_width8_models(self):
        start = time.perf_counter()
        data = generate_hierarchical_dataset(16, 3, 2, seed=9)
        worst = {}
        for kind in ("lora", "tangent", "hyplora"):
            cfg = ToyModelConfig(
                vocab=data.vocab, width=8, heads=2, layers=1, seq_len=4,
                adapter_kind=kind, rank=2, K=1.0, seed=0,
            )
            model = build_model(cfg)
            nudge = np.random.default_rng(13)
            for adp in model.adapters.values():
                adp.B.data = nudge.normal(size=adp.B.data.shape) * 0.1
            worst[kind] = grad_check_model(model, data.sequences[:6], eps=1e-5)
        elapsed = time.perf_counter() - start
        ok = all(err <= 1e-4 for err in worst.values()) and elapsed < 30.0
        verdict(ok, "gradient-fidelity",
                "; ".join(f"{k}: {v:.2e}" for k, v in worst.items())
                + f" (<=1e-4), {elapsed:.1f}s (<30s)")
        assert all(err <= 1e-4 for err in worst.values())
        assert elapsed < 30.0


class TestTrainingSmoke:
    def test_hyperbolic_adapter_halves_loss_with_frozen_base(self):
        start = time.perf_counter()
        data = generate_hierarchical_dataset(2000, depth=4, branching=3, seed=0)
        cfg = ToyModelConfig(
            vocab=data.vocab, width=32, heads=2, layers=2,
            seq_len=data.sequences.shape[1], adapter_kind="hyplora",
            rank=2, K=1.0, seed=0,
        )
        model = build_model(cfg)
        before = {k: t.data.copy() for k, t in model.params.items()}
        report = train(model, data, epochs=50, lr=0.3, seed=1)
        elapsed = time.perf_counter() - start
        frozen = all(np.array_equal(model.params[k].data, v) for k, v in before.items())
        reduction = 1.0 - report.losses[-1] / report.losses[0]
        ok = reduction >= 0.5 and frozen and elapsed < 300.0
        verdict(ok, "training-smoke",
                f"loss {report.losses[0]:.3f} -> {report.losses[-1]:.3f} "
                f"({reduction:.0%} reduction, >=50%), base weights "
                f"{'bitwise frozen' if frozen else 'MODIFIED'}, "
                f"accuracy {report.final_accuracy:.2f}, {elapsed:.0f}s (<300s)")
        assert reduction >= 0.5
        assert frozen
        assert elapsed < 300.0


class TestOutOfScope:
    def test_large_scale_results_documented_as_out_of_scope(self):
        verdict(True, "out-of-scope",
                "full-LLM accuracy tables, ablations and GPU-hour figures are "
                "not reproducible at desk scale; the property suites above "
                "stand in as acceptance")
