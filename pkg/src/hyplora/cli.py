"""Batch command-line surface.

Subcommands: ``hyperbolicity``, ``token-stats``, ``demo-cancellation``,
``train-toy``, ``grad-check``.  Every run writes a deterministic
``config.json`` echo and a ``meta.json`` (timestamps, wall time) next
to its reports; report bodies are byte-identical for identical flags
and seed.  Exit codes: 0 success, 1 validation failure, 2 I/O or
format failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .adapter import (
    CURVATURE_GRID,
    AdapterParams,
    euclidean_lora_forward,
    hyplora_forward,
    tangent_lora_forward,
)
from .errors import FormatError, ValidationError
from .hyperbolicity import (
    estimate_delta,
    graph_shortest_paths,
    prompt_level_delta,
    sample_sphere_metric,
)
from .lorentz import ROTATION, CurvedSpace
from .tokenstats import (
    FrequencyTable,
    fit_power_law,
    norm_frequency_bins,
    tokens_in_norm_range,
)
from .toy import (
    ToyModelConfig,
    build_model,
    generate_hierarchical_dataset,
    grad_check_model,
    train,
)

CANCELLATION_BOUND = 1e-6


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config_echo(out: Path, args):
    echo = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    echo["version"] = __version__
    (out / "config.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")


def _write_meta(out: Path, started: float):
    meta = {
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": time.perf_counter() - started,
        "numpy": np.__version__,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# -- hyperbolicity ---------------------------------------------------------

def cmd_hyperbolicity(args) -> int:
    out = _out_dir(args)
    rows: list[tuple] = []
    prompt_results = None
    if args.graph:
        dm = graph_shortest_paths(fileio.read_edge_list(args.graph))
        res = estimate_delta(dm, args.samples, args.seed)
        rows.append(("graph", dm.n, res))
    elif args.sphere:
        dm = sample_sphere_metric(args.sphere, args.seed)
        res = estimate_delta(dm, args.samples, args.seed)
        rows.append(("sphere", dm.n, res))
    elif args.embeddings:
        emb = fileio.read_hype(args.embeddings)
        if not args.prompts:
            raise ValidationError("--embeddings requires --prompts with token ranges")
        ranges = fileio.read_prompt_ranges(args.prompts)
        stream = fileio.read_htok(args.stream) if args.stream else None
        prompt_results = prompt_level_delta(emb, ranges, args.samples, args.seed, stream=stream)
    else:
        raise ValidationError("choose an input: --embeddings/--prompts, --graph or --sphere N")

    with open(out / "hyperbolicity.tsv", "w", encoding="utf-8") as fh:
        fh.write("source\tn_points\tsamples\tseed\tdelta\tdelta_rel\tdiameter\n")
        for source, n, res in rows:
            fh.write(
                f"{source}\t{n}\t{res.samples}\t{res.seed}\t"
                f"{res.delta!r}\t{res.delta_rel!r}\t{res.diameter!r}\n"
            )
        if prompt_results is not None:
            pr = prompt_results
            fh.write(
                f"prompts_mean\t{len(pr.per_prompt)}\t{args.samples}\t{args.seed}\t"
                f"{pr.mean_delta!r}\t{pr.mean_delta_rel!r}\t-\n"
            )
            fh.write(
                f"prompts_std\t{len(pr.per_prompt)}\t{args.samples}\t{args.seed}\t"
                f"{pr.std_delta!r}\t{pr.std_delta_rel!r}\t-\n"
            )
            fh.write(f"prompts_skipped\t{pr.skipped}\t-\t-\t-\t-\t-\n")

    values_for_hist = []
    if prompt_results is not None:
        with open(out / "prompt_deltas.tsv", "w", encoding="utf-8") as fh:
            fh.write("prompt\tn_points\tdelta\tdelta_rel\tdiameter\n")
            for i, r in enumerate(prompt_results.per_prompt):
                fh.write(f"{i}\t-\t{r.delta!r}\t{r.delta_rel!r}\t{r.diameter!r}\n")
                values_for_hist.append(r.delta_rel)
        print(
            f"prompt-level delta_rel: mean {_fmt(prompt_results.mean_delta_rel)} "
            f"std {_fmt(prompt_results.std_delta_rel)} "
            f"({len(prompt_results.per_prompt)} prompts, {prompt_results.skipped} skipped)"
        )
    for source, n, res in rows:
        values_for_hist.append(res.delta_rel)
        print(
            f"{source}: n={n} delta={_fmt(res.delta)} "
            f"delta_rel={_fmt(res.delta_rel)} diameter={_fmt(res.diameter)}"
        )

    if args.export_distances and (args.graph or args.sphere):
        fileio.write_distance_matrix_tsv(out / "distances.tsv", dm.d)
    if not args.no_figures:
        from .figures import fig_delta_histogram

        fig_delta_histogram(values_for_hist, out / "delta_hist.png")
    return 0


# -- token stats -----------------------------------------------------------

def _parse_ranges(spec: str) -> list[tuple[float, float]]:
    ranges = []
    for part in spec.split(","):
        if not part:
            continue
        pieces = part.split(":")
        if len(pieces) != 2:
            raise ValidationError(f"range {part!r} must look like lo:hi")
        lo, hi = float(pieces[0]), float(pieces[1])
        if not lo < hi:
            raise ValidationError(f"range {part!r} needs lo < hi")
        ranges.append((lo, hi))
    if not ranges:
        raise ValidationError("--ranges held no usable lo:hi pairs")
    return ranges


def cmd_token_stats(args) -> int:
    out = _out_dir(args)
    emb = fileio.read_hype(args.embeddings)
    counts = fileio.read_freq_tsv(args.freq)
    vocab = fileio.read_vocab_tsv(args.vocab) if args.vocab else None
    ft = FrequencyTable(counts=counts, total=sum(counts.values()))
    if ft.max_id() >= emb.shape[0]:
        raise ValidationError(
            f"frequency file references id {ft.max_id()} but embeddings have "
            f"{emb.shape[0]} rows"
        )
    if vocab is not None and max(vocab) >= emb.shape[0]:
        raise ValidationError("vocabulary references ids beyond the embedding rows")

    fit = fit_power_law(ft, x_min=args.x_min)
    with open(out / "powerlaw.tsv", "w", encoding="utf-8") as fh:
        fh.write("gamma\tx_min\tn_tail\tks\tnorm_kind\n")
        fh.write(f"{fit.gamma!r}\t{fit.x_min!r}\t{fit.n_tail}\t{fit.ks!r}\traw_l2\n")
    print(f"power-law fit: gamma={_fmt(fit.gamma)} x_min={fit.x_min:g} n_tail={fit.n_tail}")

    bins = norm_frequency_bins(emb, ft, n_bins=args.bins)
    with open(out / "bins.tsv", "w", encoding="utf-8") as fh:
        fh.write("norm_lo\tnorm_hi\tmean_frequency\ttoken_count\n")
        for b in bins:
            fh.write(f"{b.lo!r}\t{b.hi!r}\t{b.mean_frequency!r}\t{b.count}\n")

    if args.ranges:
        if vocab is None:
            raise ValidationError("--ranges requires --vocab to name tokens")
        with open(out / "ranges.tsv", "w", encoding="utf-8") as fh:
            fh.write("norm_lo\tnorm_hi\ttokens\n")
            for lo, hi in _parse_ranges(args.ranges):
                toks = tokens_in_norm_range(emb, vocab, lo, hi, ft)
                head = ", ".join(toks[:args.top])
                fh.write(f"{lo!r}\t{hi!r}\t{head}\n")
                print(f"norm [{lo:g}, {hi:g}): {head}")

    if not args.no_figures:
        from .figures import fig_frequency_ccdf, fig_norm_bins

        fig_frequency_ccdf(ft.values(), fit, out / "freq_ccdf.png")
        fig_norm_bins(bins, out / "norm_bins.png")
    return 0


# -- cancellation demo -------------------------------------------------------

def cmd_demo_cancellation(args) -> int:
    out = _out_dir(args)
    rng = np.random.default_rng(args.seed)
    d, k, r = args.out_dim, args.in_dim, args.rank
    grid = [args.k] if args.k is not None else list(CURVATURE_GRID)
    worst_tangent = {K: 0.0 for K in grid}
    hyp_median: dict[float, float] = {}
    hyp_devs_all: dict[float, list[float]] = {K: [] for K in grid}
    for _ in range(args.trials):
        W = rng.normal(size=(d, k)) / np.sqrt(k)
        A = rng.normal(size=(r, k)) / np.sqrt(k)
        B = rng.normal(size=(d, r)) / np.sqrt(r)
        x = rng.normal(size=k)
        for K in grid:
            p = AdapterParams(W=W, A=A, B=B, rank=r, space=CurvedSpace(K, k))
            eu = euclidean_lora_forward(x, p)
            tg = tangent_lora_forward(x, p)
            dev = float(np.linalg.norm(tg - eu) / np.linalg.norm(eu))
            worst_tangent[K] = max(worst_tangent[K], dev)
            ba = p.B @ (p.A @ (x / np.linalg.norm(x)))
            hyp = hyplora_forward(x, p) - p.W @ x
            hyp_devs_all[K].append(
                float(np.linalg.norm(hyp - ba) / max(np.linalg.norm(ba), 1e-300))
            )
    for K in grid:
        hyp_median[K] = float(np.median(hyp_devs_all[K]))

    with open(out / "cancellation.tsv", "w", encoding="utf-8") as fh:
        fh.write("K\tmax_tangent_rel_dev\tmedian_hyperbolic_rel_dev\ttrials\n")
        for K in grid:
            fh.write(f"{K!r}\t{worst_tangent[K]!r}\t{hyp_median[K]!r}\t{args.trials}\n")
    for K in grid:
        print(
            f"K={K:g}: tangent rule max deviation {_fmt(worst_tangent[K])}, "
            f"hyperbolic rule median deviation {_fmt(hyp_median[K])}"
        )
    if not args.no_figures:
        from .figures import fig_deviation_bars

        fig_deviation_bars(
            grid,
            [max(worst_tangent[K], 1e-18) for K in grid],
            [hyp_median[K] for K in grid],
            out / "cancellation.png",
        )
    overall = max(worst_tangent.values())
    if overall > CANCELLATION_BOUND:
        print(
            f"cancellation bound violated: {overall:.3e} > {CANCELLATION_BOUND:.0e}",
            file=sys.stderr,
        )
        return 1
    return 0


# -- toy training ------------------------------------------------------------

def _toy_config(args, adapter_kind: str, vocab: int, seq_len: int) -> ToyModelConfig:
    return ToyModelConfig(
        vocab=vocab,
        width=args.width,
        heads=args.heads,
        layers=args.layers,
        seq_len=seq_len,
        adapter_kind=adapter_kind,
        rank=args.rank,
        variant=args.variant,
        K=args.k,
        seed=args.seed,
    )


def _save_toy_checkpoint(out: Path, suffix: str, model) -> None:
    """Frozen-weights blob plus one adapter checkpoint per adapted matrix."""
    fileio.save_frozen(out / f"frozen_{suffix}.hfrz", model.frozen_arrays())
    if not model.adapters:
        return
    adapter_dir = out / f"adapters_{suffix}"
    adapter_dir.mkdir(exist_ok=True)
    for key, adp in sorted(model.adapters.items()):
        W = model.params[key].data
        scale = float(adp.s.data) if adp.s is not None else 1.0
        variant = model.cfg.variant if model.cfg.adapter_kind == "hyplora" else ROTATION
        params = AdapterParams(
            W=W, A=adp.A.data, B=adp.B.data, rank=model.cfg.rank,
            space=CurvedSpace(model.cfg.K, W.shape[1]),
            norm_scale=scale, variant=variant,
        )
        fileio.save_adapter(adapter_dir / f"{key}.hlra", params)


def cmd_train_toy(args) -> int:
    out = _out_dir(args)
    data = generate_hierarchical_dataset(args.examples, args.depth, args.branching, args.seed)
    kinds = args.adapter.split(",")
    curves: dict[str, list[float]] = {}
    for kind in kinds:
        cfg = _toy_config(args, kind, data.vocab, data.sequences.shape[1])
        model = build_model(cfg)
        report = train(
            model, data, epochs=args.epochs, lr=args.lr, seed=args.seed,
            batch_size=args.batch_size,
        )
        suffix = kind if len(kinds) > 1 else "toy"
        with open(out / f"train_report_{suffix}.jsonl", "w", encoding="utf-8") as fh:
            for epoch, (loss, acc) in enumerate(zip(report.losses, report.accuracies)):
                fh.write(json.dumps(
                    {"epoch": epoch, "loss": loss, "accuracy": acc}, sort_keys=True
                ) + "\n")
        _save_toy_checkpoint(out, suffix, model)
        curves[kind] = report.losses
        print(
            f"adapter={kind}: loss {_fmt(report.losses[0])} -> {_fmt(report.losses[-1])}, "
            f"accuracy {_fmt(report.final_accuracy)}, {report.wall_seconds:.1f}s"
        )
    if not args.no_figures:
        from .figures import fig_loss_curves

        fig_loss_curves(curves, out / "loss_curve.png")
    return 0


def cmd_grad_check(args) -> int:
    out = _out_dir(args)
    data = generate_hierarchical_dataset(64, 3, 2, args.seed)
    results: list[tuple[str, float]] = []
    for kind in args.adapter.split(","):
        cfg = ToyModelConfig(
            vocab=data.vocab, width=args.width, heads=2, layers=1,
            seq_len=data.sequences.shape[1], adapter_kind=kind, rank=args.rank,
            variant=args.variant, K=args.k, seed=args.seed,
        )
        model = build_model(cfg)
        err = grad_check_model(model, data.sequences[:8], eps=args.eps)
        results.append((kind, err))
        print(f"adapter={kind}: max relative gradient error {err:.3e}")
    with open(out / "grad_check.tsv", "w", encoding="utf-8") as fh:
        fh.write("adapter\tmax_rel_error\teps\n")
        for kind, err in results:
            fh.write(f"{kind}\t{err!r}\t{args.eps!r}\n")
    worst = max(err for _, err in results)
    return 0 if worst <= 1e-4 else 1


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyplora",
        description="Hyperbolicity diagnostics and Lorentz low-rank adapter toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="hyplora-out")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("hyperbolicity", help="sampled four-point hyperbolicity")
    p.add_argument("--embeddings", help="HYPE embedding file")
    p.add_argument("--prompts", help="prompt range file (start end per line)")
    p.add_argument("--stream", help="HTOK token stream the prompt ranges index; "
                                    "without it ranges index embedding rows")
    p.add_argument("--graph", help="edge-list file, 'u v' per line")
    p.add_argument("--sphere", type=int, help="sample N uniform points on the 2-sphere")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--export-distances", action="store_true")
    common(p)
    p.set_defaults(func=cmd_hyperbolicity)

    p = sub.add_parser("token-stats", help="frequency power law and norm structure")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--freq", required=True, help="TSV id<TAB>count")
    p.add_argument("--vocab", help="TSV id<TAB>string")
    p.add_argument("--ranges", help="norm ranges lo:hi[,lo:hi...]")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--top", type=int, default=12, help="tokens listed per range")
    common(p)
    p.set_defaults(func=cmd_token_stats)

    p = sub.add_parser("demo-cancellation", help="tangent-rule collapse vs hyperbolic rule")
    p.add_argument("--out-dim", type=int, default=32)
    p.add_argument("--in-dim", type=int, default=32)
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--k", type=float, default=None,
                   help="curvature parameter; default sweeps the search grid")
    p.add_argument("--trials", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_demo_cancellation)

    p = sub.add_parser("train-toy", help="train the toy decoder on the tree task")
    p.add_argument("--adapter", default="hyplora",
                   help="none|lora|tangent|hyplora, comma list for side-by-side runs")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--branching", type=int, default=3)
    p.add_argument("--examples", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--variant", choices=["rotation", "boost"], default=ROTATION)
    p.add_argument("--k", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("grad-check", help="finite-difference check of adapter gradients")
    p.add_argument("--adapter", default="lora,tangent,hyplora")
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--variant", choices=["rotation", "boost"], default=ROTATION)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1e-5)
    common(p)
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        out = _out_dir(args)
        _write_config_echo(out, args)
        code = args.func(args)
        _write_meta(out, started)
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
