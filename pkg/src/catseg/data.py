"""Corpus formats, training windows, snippet corruption, and batching."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .errors import ContractError, CorruptionError, ParseError

logger = logging.getLogger(__name__)

CHOI_DELIMITER = "=========="


@dataclass
class Document:
    id: str
    sentences: list[list[str]]
    boundaries: list[int]

    def __post_init__(self) -> None:
        if len(self.sentences) != len(self.boundaries):
            raise ContractError(
                f"document {self.id!r}: {len(self.sentences)} sentences, "
                f"{len(self.boundaries)} boundary flags"
            )

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def n_segments(self) -> int:
        return int(np.sum(self.boundaries))

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "sentences": self.sentences, "boundaries": list(map(int, self.boundaries))},
            ensure_ascii=False,
        )


@dataclass
class ParseStats:
    coerced_first_boundary: int = 0


def parse_jsonl(path: str | Path, stats: ParseStats | None = None) -> list[Document]:
    """Read pre-tokenised documents, one JSON object per line.

    A leading boundary flag of 0 is coerced to 1 and counted in ``stats``.
    """
    stats = stats if stats is not None else ParseStats()
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", line=lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line=lineno)
            for key in ("id", "sentences", "boundaries"):
                if key not in obj:
                    raise ParseError(f"missing field {key!r}", line=lineno)
            sentences, boundaries = obj["sentences"], obj["boundaries"]
            if not isinstance(sentences, list) or not all(
                isinstance(s, list) and s and all(isinstance(t, str) for t in s) for s in sentences
            ):
                raise ParseError("'sentences' must be a list of non-empty token lists", line=lineno)
            if not isinstance(boundaries, list) or any(b not in (0, 1) for b in boundaries):
                raise ParseError("'boundaries' must be a list of 0/1 flags", line=lineno)
            if len(sentences) != len(boundaries):
                raise ParseError(
                    f"{len(sentences)} sentences but {len(boundaries)} boundaries", line=lineno
                )
            boundaries = [int(b) for b in boundaries]
            if boundaries and boundaries[0] != 1:
                boundaries[0] = 1
                stats.coerced_first_boundary += 1
            docs.append(Document(str(obj["id"]), sentences, boundaries))
    if stats.coerced_first_boundary:
        logger.warning("%s: coerced %d leading boundary flags to 1", path, stats.coerced_first_boundary)
    return docs


def write_jsonl(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(doc.to_json() + "\n")


def tokenize(line: str) -> list[str]:
    return line.lower().split()


def parse_choi(path: str | Path, doc_id: str | None = None) -> Document:
    """Read a segment-delimited file: one sentence per line, segments split by ``==========``."""
    path = Path(path)
    sentences: list[list[str]] = []
    boundaries: list[int] = []
    starts_segment = True
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\r\n")
            if line == CHOI_DELIMITER:
                starts_segment = True
                continue
            tokens = tokenize(line)
            if not tokens:
                continue
            sentences.append(tokens)
            boundaries.append(1 if starts_segment else 0)
            starts_segment = False
    if not sentences:
        raise ParseError(f"{path}: empty document")
    return Document(doc_id or path.stem, sentences, boundaries)


def write_choi(doc: Document, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tokens, b in zip(doc.sentences, doc.boundaries):
            if b:
                fh.write(CHOI_DELIMITER + "\n")
            fh.write(" ".join(tokens) + "\n")
        fh.write(CHOI_DELIMITER + "\n")


@dataclass
class Snippet:
    """A window of at most ``size`` consecutive sentences of one document."""

    doc_id: str
    start: int
    sentences: list[list[str]]
    labels: list[int]
    size: int

    def __post_init__(self) -> None:
        if not 1 <= len(self.sentences) <= self.size:
            raise ContractError(f"snippet needs 1..{self.size} sentences, got {len(self.sentences)}")
        if len(self.labels) != len(self.sentences):
            raise ContractError("snippet labels and sentences differ in length")

    @property
    def n_real(self) -> int:
        return len(self.sentences)

    @property
    def end(self) -> int:
        return self.start + self.n_real

    @property
    def is_padded(self) -> list[bool]:
        return [False] * self.n_real + [True] * (self.size - self.n_real)

    def overlaps(self, other: "Snippet") -> bool:
        return self.doc_id == other.doc_id and self.start < other.end and other.start < self.end


def _window(doc: Document, start: int, K: int) -> Snippet:
    stop = min(start + K, len(doc))
    return Snippet(doc.id, start, doc.sentences[start:stop], doc.boundaries[start:stop], K)


def training_windows(doc: Document, K: int) -> list[Snippet]:
    """Windows of ``K`` sentences with stride ``K/2``.

    A final window ending on the last sentence is added when the stride
    would leave a tail uncovered; documents shorter than ``K`` give a single
    padded window.
    """
    if K < 2 or K % 2:
        raise ContractError(f"training windows need an even K >= 2, got {K}")
    n = len(doc)
    if n == 0:
        raise ContractError(f"document {doc.id!r} is empty")
    if n <= K:
        return [_window(doc, 0, K)]
    starts = list(range(0, n - K + 1, K // 2))
    if starts[-1] + K < n:
        starts.append(n - K)
    return [_window(doc, s, K) for s in starts]


def inference_windows(doc: Document, K: int) -> list[Snippet]:
    """All stride-1 windows (a single padded window for short documents)."""
    n = len(doc)
    if n == 0:
        raise ContractError(f"document {doc.id!r} is empty")
    if n <= K:
        return [_window(doc, 0, K)]
    return [_window(doc, s, K) for s in range(n - K + 1)]


@dataclass(frozen=True)
class CorruptionSpec:
    p1: float = 0.5
    p2: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p1", "p2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {value}")


MAX_SHUFFLE_TRIES = 100


def corrupt_snippet(
    snippet: Snippet,
    pool: Sequence[Snippet],
    spec: CorruptionSpec,
    rng: np.random.Generator,
) -> Snippet:
    """Shuffle a snippet's sentences and, for a ``p1`` share of snippets,
    swap each sentence with probability ``p2`` for one drawn from a
    non-overlapping snippet of the same document.

    Shuffles that reproduce the original sentence sequence are redrawn.
    Labels of the result are meaningless and set to zero.
    """
    n = snippet.n_real
    if n < 2:
        raise CorruptionError(f"cannot corrupt a snippet with {n} real sentence(s)")
    original = snippet.sentences
    for _ in range(MAX_SHUFFLE_TRIES):
        perm = rng.permutation(n)
        shuffled = [original[i] for i in perm]
        if shuffled != original:
            break
    else:
        raise CorruptionError("every permutation reproduces the original order")

    donors = [p for p in pool if p.doc_id == snippet.doc_id and not p.overlaps(snippet)]
    if donors and rng.random() < spec.p1:
        candidates = [s for p in donors for s in p.sentences]
        for i in range(n):
            if rng.random() < spec.p2:
                shuffled[i] = candidates[int(rng.integers(len(candidates)))]
    return Snippet(snippet.doc_id, snippet.start, shuffled, [0] * n, snippet.size)


@dataclass
class SnippetBatch:
    token_ids: np.ndarray  # (N, K, T+1), position 0 is [ss]
    token_mask: np.ndarray  # (N, K, T+1) bool
    sentence_mask: np.ndarray  # (N, K) bool
    labels: np.ndarray  # (N, K) int, 1 = starts a segment
    loss_mask: np.ndarray  # (N, K) bool
    doc_ids: list[str] = field(default_factory=list)
    starts: list[int] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.token_ids.shape


def batch_and_pad(snippets: Sequence[Snippet], table: EmbeddingTable, K: int, T: int) -> SnippetBatch:
    """Encode snippets as padded id arrays with masks.

    Each sentence becomes ``[ss]`` followed by its first ``T`` tokens, padded
    to ``T + 1`` ids. Missing sentences are all-pad apart from ``[ss]``. The
    loss mask drops padding sentences and each document's first sentence.
    """
    N = len(snippets)
    ids = np.full((N, K, T + 1), table.pad_id, dtype=np.int64)
    ids[:, :, 0] = table.ss_id
    tmask = np.zeros((N, K, T + 1), dtype=bool)
    tmask[:, :, 0] = True
    smask = np.zeros((N, K), dtype=bool)
    labels = np.zeros((N, K), dtype=np.int64)
    lmask = np.zeros((N, K), dtype=bool)
    index, oov = table.index, table.oov_id
    for n, snip in enumerate(snippets):
        if snip.n_real > K:
            raise ContractError(f"snippet has {snip.n_real} sentences, K={K}")
        for i, tokens in enumerate(snip.sentences):
            toks = tokens[:T]
            ids[n, i, 1 : len(toks) + 1] = [index.get(t, oov) for t in toks]
            tmask[n, i, 1 : len(toks) + 1] = True
            smask[n, i] = True
            labels[n, i] = snip.labels[i]
            lmask[n, i] = not (snip.start == 0 and i == 0)
    return SnippetBatch(
        ids, tmask, smask, labels, lmask, [s.doc_id for s in snippets], [s.start for s in snippets]
    )
