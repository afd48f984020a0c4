"""Training loop and windowed inference."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels
from . import ndtensor as nt
from .checkpoint import save_checkpoint
from .data import (
    CorruptionSpec,
    Document,
    Snippet,
    batch_and_pad,
    corrupt_snippet,
    inference_windows,
    training_windows,
)
from .embeddings import EmbeddingTable
from .errors import ContractError, TrainingError
from .model import (
    ModelConfig,
    Params,
    coherence_loss,
    coherence_scores,
    encode_snippets,
    forward,
    init_params,
    segment_classify,
)

logger = logging.getLogger(__name__)

SEG = "J_seg"
COH = "J_coh"


@dataclass(frozen=True)
class TrainSettings:
    batch_size: int = 32
    epochs: int = 1
    seed: int = 0
    learning_rate: float = 1e-4
    checkpoint_every: int = 0  # epochs between checkpoints; 0 disables

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.epochs < 1 or self.learning_rate <= 0:
            raise ContractError(f"batch_size, epochs and learning_rate must be positive: {self}")
        if self.checkpoint_every < 0 or self.seed < 0:
            raise ContractError(f"checkpoint_every and seed must be non-negative: {self}")


@dataclass
class TrainingLog:
    entries: list[tuple[int, str, float]] = field(default_factory=list)

    def add(self, step: int, objective: str, value: float) -> None:
        self.entries.append((step, objective, value))

    def values(self, objective: str) -> list[float]:
        return [v for _, o, v in self.entries if o == objective]

    def lines(self) -> list[str]:
        return [f"{s}\t{o}\t{v!r}" for s, o, v in self.entries]

    def write(self, path: str | Path) -> None:
        Path(path).write_text("".join(line + "\n" for line in self.lines()), encoding="utf-8")


@dataclass
class TrainResult:
    params: Params
    log: TrainingLog
    optimizer: nt.AdamState
    steps: int


def _stream(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


def _grads(params: Params) -> dict[str, np.ndarray | None]:
    return {name: p.grad for name, p in params.items()}


def _clear_grads(params: Params) -> None:
    for p in params.values():
        p.grad = None


def seg_objective(batch, table, params, config, rng) -> nt.Tensor:
    return forward(batch, None, table, params, config, "train", rng).j_seg


def coh_objective(
    originals: Sequence[Snippet], corrupt: Sequence[Snippet], table, params, config, rng
) -> nt.Tensor:
    """Coherence loss for (original, corrupt) pairs encoded in one joint batch."""
    n = len(originals)
    joint = batch_and_pad(list(originals) + list(corrupt), table, config.K, config.T)
    ss0, _ = encode_snippets(joint, table, params, config, "train", rng)
    coh, coh_bar = coherence_scores(ss0[:n], ss0[n:], params)
    return coherence_loss(coh, coh_bar, config.delta_coh)


def train(
    corpus: Sequence[Document],
    table: EmbeddingTable,
    config: ModelConfig,
    settings: TrainSettings,
    corruption: CorruptionSpec = CorruptionSpec(),
    checkpoint_dir: str | Path | None = None,
    on_step: Callable[[int, str, float], None] | None = None,
) -> TrainResult:
    """Adam training on the segmentation loss, alternating with the coherence
    loss when ``config.coherence_enabled``.

    Each batch of snippets yields one segmentation update followed by one
    coherence update on (snippet, corruption) pairs from the same batch.
    Every random stream derives from ``settings.seed``.
    """
    if not corpus:
        raise ContractError("training corpus is empty")
    if table.dim != config.d_e:
        raise ContractError(f"embedding dim {table.dim} does not match d_e={config.d_e}")
    seed = settings.seed
    params = init_params(config, seed=seed)
    state = nt.AdamState(learning_rate=settings.learning_rate)
    log = TrainingLog()

    snippets = [w for doc in corpus for w in training_windows(doc, config.K)]
    pools: dict[str, list[Snippet]] = {}
    for s in snippets:
        pools.setdefault(s.doc_id, []).append(s)

    step = 0

    def update(loss: nt.Tensor, tape: nt.Tape, objective: str) -> None:
        nonlocal params, step
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingError(f"non-finite {objective} = {value} at step {step + 1}")
        nt.backward(tape, loss)
        params, _ = nt.adam_step(params, _grads(params), state)
        step += 1
        log.add(step, objective, value)
        if on_step is not None:
            on_step(step, objective, value)

    for epoch in range(settings.epochs):
        order = _stream(seed, epoch, 0).permutation(len(snippets))
        drop_rng = _stream(seed, epoch, 1)
        corrupt_rng = _stream(seed, epoch, 2, corruption.seed)
        for lo in range(0, len(order), settings.batch_size):
            chunk = [snippets[i] for i in order[lo : lo + settings.batch_size]]
            batch = batch_and_pad(chunk, table, config.K, config.T)
            _clear_grads(params)
            with nt.Tape() as tape:
                loss = seg_objective(batch, table, params, config, drop_rng)
            update(loss, tape, SEG)

            if not config.coherence_enabled:
                continue
            originals = [s for s in chunk if s.n_real >= 2]
            corrupt = []
            for s in originals:
                corrupt.append(corrupt_snippet(s, pools[s.doc_id], corruption, corrupt_rng))
            if not originals:
                continue
            _clear_grads(params)
            with nt.Tape() as tape:
                loss = coh_objective(originals, corrupt, table, params, config, drop_rng)
            update(loss, tape, COH)

        if checkpoint_dir is not None and settings.checkpoint_every and (epoch + 1) % settings.checkpoint_every == 0:
            path = Path(checkpoint_dir) / f"epoch-{epoch + 1:04d}.ckpt"
            save_checkpoint(path, params, config, seed, {"epoch": epoch + 1, "step": step})
        logger.info("epoch %d done, %d steps", epoch + 1, step)
    return TrainResult(params, log, state, step)


@dataclass
class SegmentationResult:
    doc_id: str
    probabilities: list[float]
    boundaries: list[int]
    tau: float

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "probabilities": self.probabilities, "boundaries": self.boundaries}


def window_probabilities(
    windows: Sequence[Snippet], table: EmbeddingTable, params: Params, config: ModelConfig, batch_size: int = 64
) -> np.ndarray:
    """Boundary probability for every slot of every window, shape (W, K)."""
    out = []
    with nt.no_tape():
        for lo in range(0, len(windows), batch_size):
            batch = batch_and_pad(windows[lo : lo + batch_size], table, config.K, config.T)
            _, ctx = encode_snippets(batch, table, params, config, "eval")
            out.append(segment_classify(ctx, params).data[..., 0])
    return np.concatenate(out, axis=0).astype(np.float64)


def infer_document(
    doc: Document,
    table: EmbeddingTable,
    params: Params,
    config: ModelConfig,
    tau: float | None = None,
    batch_size: int = 64,
) -> SegmentationResult:
    """Segment one document with stride-1 windows.

    A sentence's probability is the mean over the windows that contain it
    (up to K of them). Sentences above ``tau`` start a segment; the first
    sentence always does.
    """
    tau = config.threshold if tau is None else tau
    windows = inference_windows(doc, config.K)
    probs = window_probabilities(windows, table, params, config, batch_size)
    starts = np.array([w.start for w in windows], dtype=np.int64)
    lengths = np.array([w.n_real for w in windows], dtype=np.int64)
    mean, _ = kernels.window_average(np.ascontiguousarray(probs), starts, lengths, len(doc))
    boundaries = (mean > tau).astype(int).tolist()
    boundaries[0] = 1
    return SegmentationResult(doc.id, mean.tolist(), boundaries, tau)


def segment_corpus(
    docs: Sequence[Document],
    table: EmbeddingTable,
    params: Params,
    config: ModelConfig,
    tau: float | None = None,
    workers: int = 1,
) -> list[SegmentationResult]:
    if workers <= 1:
        return [infer_document(d, table, params, config, tau) for d in docs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda d: infer_document(d, table, params, config, tau), docs))
