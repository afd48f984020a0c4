"""Two-level Transformer segmenter with a coherence regressor.

Token-level encoder: each sentence (``[ss]`` plus ``T`` tokens) is embedded as
word vector concatenated with a learned position vector, and the encoded
``[ss]`` position becomes the sentence vector. Sentence-level encoder: the
sentence vectors, prefixed with a fixed snippet-start vector and summed with
learned sentence-position vectors, are contextualised; position 0 encodes
the whole snippet, positions ``1..K`` feed the boundary classifier.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np

from . import ndtensor as nt
from .data import SnippetBatch
from .embeddings import EmbeddingTable
from .errors import ContractError, ShapeError
from .ndtensor import Tensor

LOG_EPS = 1e-12
MASK_VALUE = -1e9

Params = dict[str, Tensor]


@dataclass(frozen=True, kw_only=True)
class ModelConfig:
    """Hyperparameters. ``d_e`` has no default: it must match the embedding table
    and ``d_e + d_p`` must divide evenly across ``heads``."""

    d_e: int
    K: int = 16
    T: int = 50
    d_p: int = 10
    n_tt: int = 6
    n_ts: int = 6
    heads: int = 4
    ff_dim: int = 1024
    dropout: float = 0.1
    delta_coh: float = 1.0
    tau: float | None = None
    coherence_enabled: bool = True

    def __post_init__(self) -> None:
        if self.K < 2 or self.T < 1:
            raise ContractError(f"need K >= 2 and T >= 1, got K={self.K} T={self.T}")
        for name in ("d_e", "d_p", "n_tt", "n_ts", "heads", "ff_dim"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.heads:
            raise ContractError(f"d_e + d_p = {self.d_model} is not divisible by heads={self.heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ContractError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.tau is not None and not 0.0 < self.tau < 1.0:
            raise ContractError(f"tau must lie in (0, 1), got {self.tau}")

    @property
    def d_model(self) -> int:
        return self.d_e + self.d_p

    @property
    def threshold(self) -> float:
        """Inference threshold; defaults to 0.3 with coherence training, 0.5 without."""
        if self.tau is not None:
            return self.tau
        return 0.3 if self.coherence_enabled else 0.5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ContractError(f"unknown model config keys: {sorted(unknown)}")
        if "d_e" not in d:
            raise ContractError("model config needs d_e")
        return cls(**d)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _encoder_layer_params(prefix: str, d: int, ff: int, rng: np.random.Generator) -> dict:
    p = {}
    for name in ("wq", "wk", "wv", "wo"):
        p[f"{prefix}.attn.{name}"] = _xavier(rng, d, d, (d, d))
        p[f"{prefix}.attn.b{name[1]}"] = np.zeros(d)
    p[f"{prefix}.ln1.gain"] = np.ones(d)
    p[f"{prefix}.ln1.bias"] = np.zeros(d)
    p[f"{prefix}.ff.w1"] = _xavier(rng, d, ff, (d, ff))
    p[f"{prefix}.ff.b1"] = np.zeros(ff)
    p[f"{prefix}.ff.w2"] = _xavier(rng, ff, d, (ff, d))
    p[f"{prefix}.ff.b2"] = np.zeros(d)
    p[f"{prefix}.ln2.gain"] = np.ones(d)
    p[f"{prefix}.ln2.bias"] = np.zeros(d)
    return p


FIXED_PARAMS = ("s0",)


def init_params(config: ModelConfig, seed: int = 0, dtype=None) -> Params:
    """Create every named parameter tensor.

    ``s0`` (the snippet-start vector) is a unit-norm draw from ``seed`` and is
    never trained.
    """
    dtype = np.dtype(dtype or nt.default_dtype())
    rng = np.random.default_rng(seed)
    d = config.d_model
    raw: dict[str, np.ndarray] = {
        "tok_pos": rng.normal(0.0, 0.02, size=(config.T + 1, config.d_p)),
        "sent_pos": rng.normal(0.0, 0.02, size=(config.K + 1, d)),
        "ss_embedding": rng.normal(0.0, 0.02, size=config.d_e),
    }
    s0 = rng.normal(size=d)
    raw["s0"] = s0 / np.linalg.norm(s0)
    for layer in range(config.n_tt):
        raw.update(_encoder_layer_params(f"token.{layer}", d, config.ff_dim, rng))
    for layer in range(config.n_ts):
        raw.update(_encoder_layer_params(f"sentence.{layer}", d, config.ff_dim, rng))
    raw["seg.w"] = _xavier(rng, d, 2, (d, 2))
    raw["seg.b"] = np.zeros(2)
    raw["coh.w"] = _xavier(rng, d, 1, (d,))
    raw["coh.b"] = np.zeros(1)
    return {
        name: Tensor(value.astype(dtype), requires_grad=name not in FIXED_PARAMS)
        for name, value in raw.items()
    }


def check_params(params: Params, config: ModelConfig) -> None:
    expected = init_shapes(config)
    missing = set(expected) - set(params)
    if missing:
        raise ShapeError(f"missing parameters: {sorted(missing)}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ShapeError(f"parameter {name!r} has shape {params[name].shape}, expected {shape}")


def init_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    return {k: v.shape for k, v in init_params(config, 0).items()}


def _linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return nt.add(nt.matmul(x, w), b)


def _attention(
    x: Tensor, key_mask: np.ndarray, p: Params, prefix: str, heads: int, rate: float, rng
) -> Tensor:
    B, L, D = x.shape
    dk = D // heads

    def split(t: Tensor) -> Tensor:
        return nt.transpose(nt.reshape(t, (B, L, heads, dk)), (0, 2, 1, 3))

    q = split(_linear(x, p[f"{prefix}.attn.wq"], p[f"{prefix}.attn.bq"]))
    k = split(_linear(x, p[f"{prefix}.attn.wk"], p[f"{prefix}.attn.bk"]))
    v = split(_linear(x, p[f"{prefix}.attn.wv"], p[f"{prefix}.attn.bv"]))
    scores = nt.mul(nt.matmul(q, nt.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dk))
    scores = nt.masked_fill(scores, ~key_mask[:, None, None, :], MASK_VALUE)
    weights = nt.dropout(nt.softmax(scores, axis=-1), rate, rng)
    ctx = nt.reshape(nt.transpose(nt.matmul(weights, v), (0, 2, 1, 3)), (B, L, D))
    return _linear(ctx, p[f"{prefix}.attn.wo"], p[f"{prefix}.attn.bo"])


def encoder_layer(x: Tensor, key_mask: np.ndarray, p: Params, prefix: str, config: ModelConfig, rng) -> Tensor:
    """Post-norm Transformer block: attention, add & norm, ReLU feed-forward, add & norm."""
    rate = config.dropout if rng is not None else 0.0
    h = _attention(x, key_mask, p, prefix, config.heads, rate, rng)
    x = nt.layer_norm(nt.add(x, h), p[f"{prefix}.ln1.gain"], p[f"{prefix}.ln1.bias"])
    h = nt.dropout(nt.relu(_linear(x, p[f"{prefix}.ff.w1"], p[f"{prefix}.ff.b1"])), rate, rng)
    h = _linear(h, p[f"{prefix}.ff.w2"], p[f"{prefix}.ff.b2"])
    return nt.layer_norm(nt.add(x, h), p[f"{prefix}.ln2.gain"], p[f"{prefix}.ln2.bias"])


def _check_mode(mode: str, rng) -> np.random.Generator | None:
    if mode not in ("train", "eval"):
        raise ContractError(f"mode must be 'train' or 'eval', got {mode!r}")
    return rng if mode == "train" else None


def encode_sentences(
    batch: SnippetBatch,
    table: EmbeddingTable,
    params: Params,
    config: ModelConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Sentence vectors of shape (N, K, d_model) from the token-level encoder."""
    rng = _check_mode(mode, rng)
    ids = batch.token_ids
    N, K, L = ids.shape
    if L != config.T + 1:
        raise ShapeError(f"batch has {L} token slots, config expects T+1={config.T + 1}")
    if ids.min() < 0 or ids.max() >= len(table):
        raise ContractError(f"token id out of vocabulary range [0, {len(table)})")
    if table.dim != config.d_e:
        raise ShapeError(f"embedding dim {table.dim} does not match d_e={config.d_e}")
    dtype = params["tok_pos"].dtype
    words = Tensor(table.vectors[ids[:, :, 1:].reshape(N * K, L - 1)].astype(dtype))
    ss = nt.broadcast_to(nt.reshape(params["ss_embedding"], (1, 1, config.d_e)), (N * K, 1, config.d_e))
    word_part = nt.concat([ss, words], axis=1)
    pos = nt.broadcast_to(nt.reshape(params["tok_pos"], (1, L, config.d_p)), (N * K, L, config.d_p))
    x = nt.concat([word_part, pos], axis=-1)
    mask = batch.token_mask.reshape(N * K, L)
    for layer in range(config.n_tt):
        x = encoder_layer(x, mask, params, f"token.{layer}", config, rng)
    return nt.reshape(nt.getitem(x, (slice(None), 0)), (N, K, config.d_model))


def contextualize(
    sentence_vectors: Tensor,
    sentence_mask: np.ndarray,
    params: Params,
    config: ModelConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """Return (snippet encoding (N, d), contextual sentence vectors (N, K, d))."""
    rng = _check_mode(mode, rng)
    N, K, d = sentence_vectors.shape
    s0 = nt.broadcast_to(nt.reshape(params["s0"], (1, 1, d)), (N, 1, d))
    x = nt.concat([s0, sentence_vectors], axis=1)
    x = nt.add(x, nt.getitem(params["sent_pos"], slice(0, K + 1)))
    mask = np.concatenate([np.ones((N, 1), dtype=bool), np.asarray(sentence_mask, dtype=bool)], axis=1)
    for layer in range(config.n_ts):
        x = encoder_layer(x, mask, params, f"sentence.{layer}", config, rng)
    return nt.getitem(x, (slice(None), 0)), nt.getitem(x, (slice(None), slice(1, None)))


def segment_classify(contextual: Tensor, params: Params) -> Tensor:
    """Per-sentence [boundary, no-boundary] probabilities, shape (N, K, 2)."""
    return nt.softmax(_linear(contextual, params["seg.w"], params["seg.b"]), axis=-1)


def segmentation_loss(probs: Tensor, labels: np.ndarray, loss_mask: np.ndarray) -> Tensor:
    """Summed negative log-likelihood over unmasked sentences."""
    labels = np.asarray(labels)
    if probs.shape[:-1] != labels.shape:
        raise ShapeError(f"probabilities {probs.shape} do not match labels {labels.shape}")
    # label 1 selects component 0 (boundary)
    onehot = np.stack([labels == 1, labels != 1], axis=-1).astype(probs.dtype)
    picked = nt.sum(nt.mul(probs, onehot), axis=-1)
    nll = nt.mul(nt.log(picked, eps=LOG_EPS), -np.asarray(loss_mask, dtype=probs.dtype))
    return nt.sum(nll)


def coherence_scores(ss0: Tensor, ss0_corrupt: Tensor, params: Params) -> tuple[Tensor, Tensor]:
    """Jointly softmax-normalised coherence of (original, corrupt), each shape (N,)."""
    w = nt.reshape(params["coh.w"], (-1, 1))
    logits = nt.concat(
        [_linear(ss0, w, params["coh.b"]), _linear(ss0_corrupt, w, params["coh.b"])], axis=1
    )
    p = nt.softmax(logits, axis=1)
    return nt.getitem(p, (slice(None), 0)), nt.getitem(p, (slice(None), 1))


def coherence_loss(coh: Tensor, coh_corrupt: Tensor, delta_coh: float = 1.0) -> Tensor:
    """Mean over pairs of ``max(0, delta - (coh - coh_corrupt))``."""
    return nt.mean(nt.relu(nt.sub(delta_coh, nt.sub(coh, coh_corrupt))))


class ForwardOutput(NamedTuple):
    j_seg: Tensor
    j_coh: Tensor | None
    probs: Tensor
    ss0: Tensor
    ss0_corrupt: Tensor | None


def encode_snippets(batch, table, params, config, mode="eval", rng=None) -> tuple[Tensor, Tensor]:
    """Both levels in one call: (snippet encodings, contextual sentence vectors)."""
    s = encode_sentences(batch, table, params, config, mode, rng)
    return contextualize(s, batch.sentence_mask, params, config, mode, rng)


def forward(
    batch: SnippetBatch,
    corrupt_batch: SnippetBatch | None,
    table: EmbeddingTable,
    params: Params,
    config: ModelConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> ForwardOutput:
    """Full pipeline. The coherence loss is computed only when a corrupt batch is given.

    In eval mode no tape is recorded even if the caller has one active.
    """
    if corrupt_batch is not None and not config.coherence_enabled:
        raise ContractError("corrupt batch given but coherence is disabled")
    if mode == "eval":
        with nt.no_tape():
            return _forward(batch, corrupt_batch, table, params, config, mode, None)
    return _forward(batch, corrupt_batch, table, params, config, mode, rng)


def _forward(batch, corrupt_batch, table, params, config, mode, rng) -> ForwardOutput:
    ss0, ctx = encode_snippets(batch, table, params, config, mode, rng)
    probs = segment_classify(ctx, params)
    j_seg = segmentation_loss(probs, batch.labels, batch.loss_mask)
    if corrupt_batch is None:
        return ForwardOutput(j_seg, None, probs, ss0, None)
    ss0_bar, _ = encode_snippets(corrupt_batch, table, params, config, mode, rng)
    coh, coh_bar = coherence_scores(ss0, ss0_bar, params)
    j_coh = coherence_loss(coh, coh_bar, config.delta_coh)
    return ForwardOutput(j_seg, j_coh, probs, ss0, ss0_bar)
