"""Desk-scale decoder transformer with swappable low-rank adapters.

The model is deliberately small (two pre-norm blocks, width <= 64) and
runs entirely on the reverse-mode engine in :mod:`hyplora.autodiff`.
When any adapter kind is active every base weight (embeddings,
positional table, projections, layer norms) is frozen and only the
adapter factors (plus the per-matrix norm scale for the hyperbolic
kind) receive gradients.

The synthetic task emits root-to-leaf paths of a complete labelled tree
whose branch choices are Zipf-weighted, so label frequencies follow a
power law and next-token prediction has hierarchical structure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DivergenceError, ValidationError
from .lorentz import ROTATION, VARIANTS

ADAPTER_KINDS = ("none", "lora", "tangent", "hyplora")


@dataclass(frozen=True)
class ToyModelConfig:
    vocab: int
    width: int = 32
    heads: int = 2
    layers: int = 2
    seq_len: int = 8
    adapter_kind: str = "none"
    rank: int = 2
    variant: str = ROTATION
    K: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.width % self.heads != 0:
            raise ValidationError("width must be divisible by heads")
        if self.adapter_kind not in ADAPTER_KINDS:
            raise ValidationError(f"adapter_kind must be one of {ADAPTER_KINDS}")
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}")
        if not (1 <= self.rank <= self.width):
            raise ValidationError("adapter rank must satisfy 1 <= rank <= width")
        if self.vocab < 2 or self.layers < 1 or self.seq_len < 2:
            raise ValidationError("vocab >= 2, layers >= 1, seq_len >= 2 required")


@dataclass
class TrainReport:
    losses: list[float]
    accuracies: list[float]
    final_accuracy: float
    wall_seconds: float
    seed: int


@dataclass(frozen=True)
class HierarchicalDataset:
    """Root-to-leaf label paths of a complete tree, one row per example."""

    sequences: np.ndarray
    vocab: int
    depth: int
    branching: int
    seed: int


def generate_hierarchical_dataset(
    n_examples: int, depth: int, branching: int, seed: int
) -> HierarchicalDataset:
    """Sample paths of a complete ``branching``-ary tree of given depth.

    Children are picked with Zipf weights (rank r gets weight r^-1.2),
    so shallow/low-rank labels dominate and the label frequencies are
    heavy tailed by construction.  Labels are breadth-first node ids;
    the root is label 0 and doubles as the start token.
    """
    if depth < 2:
        raise ValidationError("depth must be >= 2")
    if branching < 1:
        raise ValidationError("branching must be >= 1")
    if n_examples < 1:
        raise ValidationError("n_examples must be >= 1")
    rng = np.random.default_rng(seed)
    weights = np.arange(1, branching + 1, dtype=float) ** -1.2
    weights /= weights.sum()
    choices = rng.choice(branching, size=(n_examples, depth), p=weights)
    seqs = np.zeros((n_examples, depth + 1), dtype=np.int64)
    node = np.zeros(n_examples, dtype=np.int64)
    for level in range(depth):
        node = node * branching + 1 + choices[:, level]
        seqs[:, level + 1] = node
    vocab = (branching ** (depth + 1) - 1) // (branching - 1) if branching > 1 else depth + 1
    return HierarchicalDataset(
        sequences=seqs, vocab=int(vocab), depth=depth, branching=branching, seed=seed
    )


# -- model --------------------------------------------------------------

_ADAPTED = ("attn_q", "attn_k", "attn_v", "attn_o", "mlp_fc", "mlp_proj")


@dataclass
class _Adapter:
    A: ad.Tensor
    B: ad.Tensor
    s: ad.Tensor | None  # norm scale; hyperbolic kind only


class ToyModel:
    """Parameter container plus forward graphs; built by :func:`build_model`."""

    def __init__(self, cfg: ToyModelConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        w, v = cfg.width, cfg.vocab
        hidden = 4 * w
        trainable_base = cfg.adapter_kind == "none"

        def par(shape, scale):
            return ad.Tensor(rng.normal(0.0, scale, size=shape), requires_grad=trainable_base)

        self.params: dict[str, ad.Tensor] = {
            "embed": par((v, w), 1.0 / np.sqrt(w)),
            "pos": par((cfg.seq_len, w), 1.0 / np.sqrt(w)),
            "ln_f_g": ad.Tensor(np.ones(w), requires_grad=trainable_base),
            "ln_f_b": ad.Tensor(np.zeros(w), requires_grad=trainable_base),
        }
        self._proj_shapes = {
            "attn_q": (w, w), "attn_k": (w, w), "attn_v": (w, w), "attn_o": (w, w),
            "mlp_fc": (hidden, w), "mlp_proj": (w, hidden),
        }
        for layer in range(cfg.layers):
            for ln in ("ln1", "ln2"):
                self.params[f"{layer}.{ln}_g"] = ad.Tensor(np.ones(w), requires_grad=trainable_base)
                self.params[f"{layer}.{ln}_b"] = ad.Tensor(np.zeros(w), requires_grad=trainable_base)
            for name, (dout, din) in self._proj_shapes.items():
                self.params[f"{layer}.{name}"] = par((dout, din), 1.0 / np.sqrt(din))

        self.adapters: dict[str, _Adapter] = {}
        if cfg.adapter_kind != "none":
            for layer in range(cfg.layers):
                for name, (dout, din) in self._proj_shapes.items():
                    a_cols = din if (cfg.adapter_kind != "hyplora" or cfg.variant == ROTATION) else din + 1
                    b_cols = cfg.rank if (cfg.adapter_kind != "hyplora" or cfg.variant == ROTATION) else cfg.rank + 1
                    bound = 1.0 / np.sqrt(din)
                    self.adapters[f"{layer}.{name}"] = _Adapter(
                        A=ad.Tensor(rng.uniform(-bound, bound, size=(cfg.rank, a_cols)), requires_grad=True),
                        B=ad.Tensor(np.zeros((dout, b_cols)), requires_grad=True),
                        s=ad.Tensor(np.asarray(1.0), requires_grad=True) if cfg.adapter_kind == "hyplora" else None,
                    )

    # -- parameter bookkeeping ---------------------------------------
    def trainable(self) -> list[tuple[str, ad.Tensor]]:
        if self.cfg.adapter_kind == "none":
            return sorted(self.params.items())
        out: list[tuple[str, ad.Tensor]] = []
        for key, adp in sorted(self.adapters.items()):
            out.append((f"{key}.A", adp.A))
            out.append((f"{key}.B", adp.B))
            if adp.s is not None:
                out.append((f"{key}.s", adp.s))
        return out

    def trainable_count(self) -> int:
        return sum(t.data.size for _, t in self.trainable())

    def frozen_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in sorted(self.params.items())}

    # -- forward -------------------------------------------------------
    def _project(self, x: ad.Tensor, key: str) -> ad.Tensor:
        from .adapter import hyplora_update_graph, lora_update_graph, tangent_update_graph

        W = self.params[key]
        base = ad.matmul(x, ad.transpose(W, (1, 0)))
        kind = self.cfg.adapter_kind
        if kind == "none":
            return base
        adp = self.adapters[key]
        if kind == "lora":
            return base + lora_update_graph(x, adp.A, adp.B)
        if kind == "tangent":
            return base + tangent_update_graph(x, adp.A, adp.B, self.cfg.K)
        return base + hyplora_update_graph(x, adp.A, adp.B, adp.s, self.cfg.K, self.cfg.variant)

    def forward(self, tokens: np.ndarray) -> ad.Tensor:
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.ndim != 2 or tokens.shape[1] > self.cfg.seq_len:
            raise ValidationError(
                f"tokens must be (batch, T<={self.cfg.seq_len}), got {tokens.shape}"
            )
        cfg = self.cfg
        bsz, t = tokens.shape
        dh = cfg.width // cfg.heads
        h = ad.take_rows(self.params["embed"], tokens) + ad.take_rows(
            self.params["pos"], np.arange(t)
        )
        causal = np.triu(np.full((t, t), -1e30), k=1)
        for layer in range(cfg.layers):
            x = ad.layer_norm(h, self.params[f"{layer}.ln1_g"], self.params[f"{layer}.ln1_b"])

            def heads(z: ad.Tensor) -> ad.Tensor:
                z = ad.reshape(z, (bsz, t, cfg.heads, dh))
                return ad.transpose(z, (0, 2, 1, 3))

            q = heads(self._project(x, f"{layer}.attn_q"))
            k = heads(self._project(x, f"{layer}.attn_k"))
            v = heads(self._project(x, f"{layer}.attn_v"))
            scores = ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh))
            att = ad.softmax(scores + ad.const(causal), axis=-1)
            ctx = ad.transpose(ad.matmul(att, v), (0, 2, 1, 3))
            ctx = ad.reshape(ctx, (bsz, t, cfg.width))
            h = h + self._project(ctx, f"{layer}.attn_o")

            x2 = ad.layer_norm(h, self.params[f"{layer}.ln2_g"], self.params[f"{layer}.ln2_b"])
            m = ad.gelu(self._project(x2, f"{layer}.mlp_fc"))
            h = h + self._project(m, f"{layer}.mlp_proj")
        hf = ad.layer_norm(h, self.params["ln_f_g"], self.params["ln_f_b"])
        # Output head tied to the embedding table.
        return ad.matmul(hf, ad.transpose(self.params["embed"], (1, 0)))

    def loss(self, sequences: np.ndarray) -> ad.Tensor:
        sequences = np.asarray(sequences, dtype=np.int64)
        logits = self.forward(sequences[:, :-1])
        flat = ad.reshape(logits, (-1, self.cfg.vocab))
        return ad.cross_entropy(flat, sequences[:, 1:].reshape(-1))

    def accuracy(self, sequences: np.ndarray) -> float:
        sequences = np.asarray(sequences, dtype=np.int64)
        logits = self.forward(sequences[:, :-1]).data
        pred = logits.argmax(axis=-1)
        return float((pred == sequences[:, 1:]).mean())


def build_model(cfg: ToyModelConfig) -> ToyModel:
    """Seeded construction; identical config -> identical initial weights."""
    return ToyModel(cfg)


def train(
    model: ToyModel,
    dataset: HierarchicalDataset,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 64,
    momentum: float = 0.9,
) -> TrainReport:
    """Cross-entropy SGD (with momentum) on next-token prediction.

    Only tensors reported by ``model.trainable()`` are updated, so base
    weights stay bitwise intact whenever adapters are active.  A
    non-finite loss aborts with a diagnostic.
    """
    seqs = dataset.sequences
    if seqs.shape[0] == 0:
        raise ValidationError("dataset is empty")
    if epochs < 1:
        raise ValidationError("epochs must be >= 1")
    rng = np.random.default_rng(seed)
    trainable = model.trainable()
    velocity = {name: np.zeros_like(t.data) for name, t in trainable}
    losses: list[float] = []
    accuracies: list[float] = []
    start = time.perf_counter()
    for epoch in range(epochs):
        order = rng.permutation(seqs.shape[0])
        total, count = 0.0, 0
        for lo in range(0, order.size, batch_size):
            batch = seqs[order[lo:lo + batch_size]]
            loss = model.loss(batch)
            value = float(loss.data)
            if not np.isfinite(value):
                raise DivergenceError(
                    f"loss became non-finite at epoch {epoch}, batch offset {lo}"
                )
            total += value * batch.shape[0]
            count += batch.shape[0]
            for _, t in trainable:
                t.zero_grad()
            loss.backward()
            for name, t in trainable:
                if t.grad is None:
                    continue
                velocity[name] = momentum * velocity[name] + t.grad
                t.data = t.data - lr * velocity[name]
        losses.append(total / count)
        accuracies.append(model.accuracy(seqs))
    return TrainReport(
        losses=losses,
        accuracies=accuracies,
        final_accuracy=accuracies[-1],
        wall_seconds=time.perf_counter() - start,
        seed=seed,
    )


def grad_check_model(model: ToyModel, batch: np.ndarray, eps: float = 1e-5) -> float:
    """Worst relative error of analytic gradients vs central differences,
    taken over every trainable scalar."""
    batch = np.asarray(batch, dtype=np.int64)
    trainable = model.trainable()
    for _, t in trainable:
        t.zero_grad()
    model.loss(batch).backward()
    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for name, t in trainable}
    worst = 0.0
    for name, t in trainable:
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(model.loss(batch).data)
            flat[i] = orig - eps
            down = float(model.loss(batch).data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            worst = max(worst, float(err))
    return worst
