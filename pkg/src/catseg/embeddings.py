"""Pretrained word vectors and orthogonal Procrustes alignment between spaces."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, ContractError, ParseError
from .ndtensor import svd_small

logger = logging.getLogger(__name__)

SS_TOKEN = "[ss]"
PAD_TOKEN = "[pad]"
OOV_TOKEN = "[oov]"


@dataclass
class EmbeddingTable:
    """Vocabulary plus a fixed vector per word.

    ``vectors`` has one row per entry of ``words`` followed by rows for the
    sentence-start, pad, and OOV ids (unless the file already supplied the
    first two). The sentence-start row here is a placeholder; the model
    owns the learnable vector used in its place.
    """

    words: list[str]
    vectors: np.ndarray
    ss_id: int
    pad_id: int
    oov_id: int
    duplicates: int = 0
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def oov_vector(self) -> np.ndarray:
        return self.vectors[self.oov_id]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def word_rows(self) -> np.ndarray:
        """Row ids of real vocabulary words (excluding the special rows)."""
        special = {self.ss_id, self.pad_id, self.oov_id}
        return np.array([i for i in range(len(self.words)) if i not in special], dtype=np.int64)

    def ids(self, tokens) -> list[int]:
        get = self.index.get
        return [get(t, self.oov_id) for t in tokens]


def build_table(words: list[str], vectors: np.ndarray, duplicates: int = 0) -> EmbeddingTable:
    """Assemble a table, appending special rows that are absent.

    The OOV vector is the component-wise mean of the supplied word vectors.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(words):
        raise ContractError(f"{len(words)} words but vectors of shape {vectors.shape}")
    if not np.all(np.isfinite(vectors)):
        raise ContractError("embedding vectors must be finite")
    dim = vectors.shape[1]
    words = list(words)
    real = [i for i, w in enumerate(words) if w not in (SS_TOKEN, PAD_TOKEN, OOV_TOKEN)]
    oov = vectors[real].mean(axis=0) if real else np.zeros(dim)
    rows = [vectors]
    for token in (SS_TOKEN, PAD_TOKEN):
        if token not in words:
            words.append(token)
            rows.append(np.zeros((1, dim)))
    words.append(OOV_TOKEN)
    rows.append(oov[None, :])
    table = np.concatenate(rows, axis=0)
    index = {w: i for i, w in enumerate(words)}
    # the pad row is zero by construction, even when the file carried one
    table[index[PAD_TOKEN]] = 0.0
    return EmbeddingTable(
        words=words,
        vectors=table,
        ss_id=index[SS_TOKEN],
        pad_id=index[PAD_TOKEN],
        oov_id=index[OOV_TOKEN],
        duplicates=duplicates,
        index=index,
    )


def load_embeddings_text(path: str | Path) -> EmbeddingTable:
    """Read the word2vec text format: a ``count dim`` header, then one word per line."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("header must be 'count dim'", line=1)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("header must be 'count dim'", line=1) from None
        if count < 0 or dim <= 0:
            raise ParseError(f"bad header values count={count} dim={dim}", line=1)
        words: list[str] = []
        rows: list[list[float]] = []
        seen: set[str] = set()
        duplicates = 0
        for lineno, line in enumerate(fh, start=2):
            if lineno - 1 > count:
                break
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise ParseError(f"expected {dim + 1} fields, got {len(parts)}", line=lineno)
            word = parts[0]
            if word in seen:
                duplicates += 1
                continue
            try:
                vec = [float(x) for x in parts[1:]]
            except ValueError:
                raise ParseError("non-numeric vector component", line=lineno) from None
            seen.add(word)
            words.append(word)
            rows.append(vec)
    if duplicates:
        logger.warning("%s: %d duplicate words ignored", path, duplicates)
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return build_table(words, vectors, duplicates=duplicates)


def write_embeddings_text(table: EmbeddingTable, path: str | Path) -> None:
    """Write vocabulary rows (not the special rows) in the word2vec text format."""
    rows = table.word_rows()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(rows)} {table.dim}\n")
        for i in rows:
            fh.write(table.words[i] + " " + " ".join(repr(float(x)) for x in table.vectors[i]) + "\n")


def lookup(table: EmbeddingTable, word: str) -> tuple[int, np.ndarray]:
    i = table.index.get(word, table.oov_id)
    return i, table.vectors[i]


@dataclass(frozen=True)
class TranslationDictionary:
    pairs: list[tuple[str, str]]

    def __len__(self) -> int:
        return len(self.pairs)


def load_dictionary(path: str | Path) -> TranslationDictionary:
    """One ``source<TAB>target`` pair per line; blank lines are skipped."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ParseError("expected 'source<TAB>target'", line=lineno)
            src, tgt = line.split("\t", 1)
            src, tgt = src.strip(), tgt.strip()
            if not src or not tgt:
                raise ParseError("empty word in dictionary pair", line=lineno)
            pairs.append((src, tgt))
    return TranslationDictionary(pairs)


@dataclass
class ProjectionMatrix:
    w: np.ndarray
    pairs_used: int = 0
    singular_values: np.ndarray | None = None

    def orthogonality_error(self) -> float:
        return float(np.linalg.norm(self.w.T @ self.w - np.eye(self.w.shape[0])))


def aligned_matrices(
    source: EmbeddingTable, target: EmbeddingTable, dictionary: TranslationDictionary
) -> tuple[np.ndarray, np.ndarray]:
    """Stack dictionary pairs into (X_S, X_T), dropping pairs with an OOV side."""
    src_rows, tgt_rows = [], []
    for s, t in dictionary.pairs:
        i, j = source.index.get(s), target.index.get(t)
        if i is None or j is None or i in (source.ss_id, source.pad_id, source.oov_id):
            continue
        if j in (target.ss_id, target.pad_id, target.oov_id):
            continue
        src_rows.append(i)
        tgt_rows.append(j)
    return source.vectors[src_rows], target.vectors[tgt_rows]


def procrustes_align(
    source: EmbeddingTable, target: EmbeddingTable, dictionary: TranslationDictionary
) -> ProjectionMatrix:
    """Orthogonal ``w`` minimising ``||X_T w - X_S||_F`` over dictionary pairs.

    ``w = U V^T`` where ``U S V^T`` is the SVD of the d x d cross-covariance
    ``X_T^T X_S``, so that target vectors map into the source space as
    ``X_T w``.
    """
    if source.dim != target.dim:
        raise AlignmentError(f"dimension mismatch: source {source.dim}, target {target.dim}")
    xs, xt = aligned_matrices(source, target, dictionary)
    n = xs.shape[0]
    if n < source.dim:
        raise AlignmentError(
            f"only {n} usable dictionary pairs, need at least {source.dim}", usable_pairs=n
        )
    u, s, v = svd_small(xt.T @ xs)
    return ProjectionMatrix(w=u @ v.T, pairs_used=n, singular_values=s)


def alignment_residual(
    source: EmbeddingTable,
    target: EmbeddingTable,
    dictionary: TranslationDictionary,
    w: np.ndarray,
) -> float:
    xs, xt = aligned_matrices(source, target, dictionary)
    return float(np.linalg.norm(xt @ w - xs))


def project_table(target: EmbeddingTable, projection: ProjectionMatrix | np.ndarray) -> EmbeddingTable:
    """Map every target word vector into the source space (``X_T w``)."""
    w = projection.w if isinstance(projection, ProjectionMatrix) else np.asarray(projection)
    rows = target.word_rows()
    words = [target.words[i] for i in rows]
    return build_table(words, target.vectors[rows] @ w)
