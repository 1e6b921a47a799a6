"""Fixture model and dataset for offline conformance tests.

The tiny decoder stands in for a pretrained model with the documented
norm structure: frequent function words sit near the origin
(norms in [0.3, 0.4)), concrete nouns farther out ([0.6, 0.7)); the
exporter itself never looks at this structure.
"""

import json
import os

import numpy as np
import pytest
import torch

os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_OFFLINE", "1")

FUNCTION_WORDS = ["to", "in", "have", "that", "and", "is", "for"]
CONTENT_WORDS = ["dog", "cow", "puppies", "apple", "bananas", "dollars", "shoes"]
MIDDLE_WORDS = [
    "how", "much", "many", "time", "cost", "animals", "fruit", "numbers",
    "items", "colors", "store", "buys", "sells", "each", "week", "day",
    "total", "left", "more", "than",
]

QUESTIONS = [
    "how many apple and bananas is in that store",
    "to have that dog cost much time and dollars",
    "how much is each apple in the store",
    "that cow and dog have many colors",
    "to buy shoes for dollars is much cost",
    "how many puppies have that cow and dog",
    "numbers of items in that store for each week",
    "fruit and animals is much more than numbers",
    "to have bananas each day is much cost",
    "how much time left to have that total",
]


@pytest.fixture(scope="session")
def fixture_model_dir(tmp_path_factory):
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import Whitespace
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    words = ["[UNK]"] + FUNCTION_WORDS + MIDDLE_WORDS + CONTENT_WORDS
    vocab = {w: i for i, w in enumerate(words)}
    tok = Tokenizer(WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    fast = PreTrainedTokenizerFast(tokenizer_object=tok, unk_token="[UNK]")

    out = tmp_path_factory.mktemp("fixture-model")
    fast.save_pretrained(out)

    cfg = GPT2Config(
        vocab_size=len(vocab), n_embd=16, n_layer=1, n_head=2, n_positions=64,
        bos_token_id=0, eos_token_id=0,
    )
    model = GPT2LMHeadModel(cfg)
    rng = np.random.default_rng(0)

    def shaped_row(norm):
        row = rng.normal(size=16)
        return torch.tensor(norm * row / np.linalg.norm(row))

    with torch.no_grad():
        table = model.get_input_embeddings().weight
        for word, idx in vocab.items():
            if word in FUNCTION_WORDS:
                norm = rng.uniform(0.31, 0.39)
            elif word in CONTENT_WORDS:
                norm = rng.uniform(0.61, 0.69)
            else:
                norm = rng.uniform(0.45, 0.55)
            table[idx] = shaped_row(norm)
    model.save_pretrained(out)
    return out


@pytest.fixture(scope="session")
def fixture_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixture-data") / "questions.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for q in QUESTIONS:
            fh.write(json.dumps({"question": q}) + "\n")
    return path
