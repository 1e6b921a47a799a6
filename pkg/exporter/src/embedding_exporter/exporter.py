"""Embedding and token-stream extraction from open-weight models.

``export`` loads a causal or encoder model plus its tokenizer (hub id
or local directory), tokenizes a dataset's question fields, and writes
the five analysis-toolkit inputs: HYPE embeddings (input embedding
table, downcast to float32), HTOK token stream, per-question prompt
ranges, frequency TSV and vocabulary TSV.  A JSON manifest records
provenance and a sha256 checksum per file.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats


class ExportError(RuntimeError):
    """Model/dataset could not be fetched or is internally inconsistent."""


@dataclass
class ExportManifest:
    model: str
    dataset: str
    split: str
    rows: int
    cols: int
    n_prompts: int
    n_tokens: int
    embedding_source: str
    norm_kind: str
    files: dict[str, str] = field(default_factory=dict)  # name -> sha256

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _load_model_and_tokenizer(model_id: str):
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise ExportError(f"could not fetch model {model_id!r}: {exc}") from exc
    return model, tokenizer


def _load_questions(dataset_id: str, split: str) -> list[str]:
    path = Path(dataset_id)
    if path.exists():
        questions = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "question" not in record:
                    raise ExportError(f"{dataset_id}:{lineno} lacks a 'question' field")
                questions.append(str(record["question"]))
        if not questions:
            raise ExportError(f"dataset file {dataset_id!r} holds no questions")
        return questions
    try:
        from datasets import load_dataset

        data = load_dataset(dataset_id, split=split)
    except Exception as exc:
        raise ExportError(f"could not fetch dataset {dataset_id!r}: {exc}") from exc
    if "question" not in data.column_names:
        raise ExportError(f"dataset {dataset_id!r} has no 'question' column")
    return [str(q) for q in data["question"]]


def export(model_id: str, dataset_id: str, split: str, out_dir) -> ExportManifest:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, tokenizer = _load_model_and_tokenizer(model_id)

    weight = model.get_input_embeddings().weight.detach().cpu().numpy()
    vocab_size = len(tokenizer)
    if weight.shape[0] != vocab_size:
        raise ExportError(
            f"embedding table has {weight.shape[0]} rows but the tokenizer "
            f"defines {vocab_size} tokens"
        )

    questions = _load_questions(dataset_id, split)
    stream: list[int] = []
    ranges: list[tuple[int, int]] = []
    for q in questions:
        ids = tokenizer.encode(q, add_special_tokens=False)
        if not ids:
            continue
        start = len(stream)
        stream.extend(int(i) for i in ids)
        ranges.append((start, len(stream)))
    if not stream:
        raise ExportError("tokenization produced an empty stream")
    if max(stream) >= weight.shape[0]:
        raise ExportError("tokenizer emitted an id beyond the embedding rows")

    counts = dict(Counter(stream))
    vocab = {i: tokenizer.convert_ids_to_tokens(i) or "" for i in range(vocab_size)}

    files = {
        "embeddings.hype": lambda p: formats.write_hype(p, weight),
        "stream.htok": lambda p: formats.write_htok(p, np.array(stream, dtype=np.int64)),
        "prompts.txt": lambda p: formats.write_prompt_ranges(p, ranges),
        "freq.tsv": lambda p: formats.write_freq_tsv(p, counts),
        "vocab.tsv": lambda p: formats.write_vocab_tsv(p, vocab),
    }
    checksums = {}
    for name, writer in files.items():
        path = out / name
        writer(path)
        checksums[name] = _sha256(path)

    manifest = ExportManifest(
        model=str(model_id),
        dataset=str(dataset_id),
        split=split,
        rows=int(weight.shape[0]),
        cols=int(weight.shape[1]),
        n_prompts=len(ranges),
        n_tokens=len(stream),
        embedding_source="input_embeddings",
        norm_kind="raw_l2",
        files=checksums,
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def validate_manifest(out_dir) -> ExportManifest:
    """Re-hash every listed file; raises ExportError on any mismatch."""
    out = Path(out_dir)
    raw = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    manifest = ExportManifest(**raw)
    for name, expected in manifest.files.items():
        path = out / name
        if not path.exists():
            raise ExportError(f"manifest lists missing file {name}")
        actual = _sha256(path)
        if actual != expected:
            raise ExportError(f"checksum mismatch for {name}: {actual} != {expected}")
    return manifest
