"""Synthetic topic-segmented corpora with matching clustered word vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Document
from .embeddings import EmbeddingTable, build_table


@dataclass(frozen=True)
class VocabSpec:
    words_per_topic: int = 40
    noise_words: int = 20
    noise_rate: float = 0.1  # chance a token is a shared noise word
    dim: int = 16
    centroid_scale: float = 1.0
    vector_noise: float = 0.3  # spread of topic words around their centroid
    sentence_length: tuple[int, int] = (4, 10)


def topic_word(topic: int, j: int) -> str:
    return f"t{topic}w{j}"


def synth_embeddings(topics: int, vocab: VocabSpec, rng: np.random.Generator) -> EmbeddingTable:
    centroids = rng.normal(size=(topics, vocab.dim))
    centroids *= vocab.centroid_scale / np.linalg.norm(centroids, axis=1, keepdims=True)
    words, rows = [], []
    for t in range(topics):
        for j in range(vocab.words_per_topic):
            words.append(topic_word(t, j))
            rows.append(centroids[t] + vocab.vector_noise * rng.normal(size=vocab.dim) / np.sqrt(vocab.dim))
    for j in range(vocab.noise_words):
        words.append(f"n{j}")
        rows.append(vocab.centroid_scale * rng.normal(size=vocab.dim) / np.sqrt(vocab.dim))
    return build_table(words, np.array(rows).reshape(len(words), vocab.dim))


def synth_corpus(
    n_docs: int,
    topics: int = 8,
    sentences_per_segment_range: tuple[int, int] = (3, 7),
    vocab_spec: VocabSpec = VocabSpec(),
    seed: int = 0,
    segments_per_doc: tuple[int, int] = (2, 4),
    id_prefix: str = "synth",
) -> tuple[list[Document], EmbeddingTable]:
    """Generate documents as runs of single-topic segments.

    Topics within a document are drawn without replacement when the pool
    allows, so neighbouring segments never share a topic. Ranges are
    inclusive.
    """
    if topics < 2:
        raise ValueError(f"need at least 2 topics, got {topics}")
    rng = np.random.default_rng(seed)
    table = synth_embeddings(topics, vocab_spec, rng)
    lo_len, hi_len = vocab_spec.sentence_length
    docs = []
    for d in range(n_docs):
        n_seg = int(rng.integers(segments_per_doc[0], segments_per_doc[1] + 1))
        if n_seg <= topics:
            seq = rng.choice(topics, size=n_seg, replace=False).tolist()
        else:
            seq = [int(rng.integers(topics))]
            while len(seq) < n_seg:
                t = int(rng.integers(topics - 1))
                seq.append(t if t < seq[-1] else t + 1)
        sentences, boundaries = [], []
        for topic in seq:
            n_sent = int(rng.integers(sentences_per_segment_range[0], sentences_per_segment_range[1] + 1))
            for i in range(n_sent):
                length = int(rng.integers(lo_len, hi_len + 1))
                tokens = []
                for _ in range(length):
                    if vocab_spec.noise_words and rng.random() < vocab_spec.noise_rate:
                        tokens.append(f"n{int(rng.integers(vocab_spec.noise_words))}")
                    else:
                        tokens.append(topic_word(topic, int(rng.integers(vocab_spec.words_per_topic))))
                sentences.append(tokens)
                boundaries.append(1 if i == 0 else 0)
        docs.append(Document(f"{id_prefix}-{d:05d}", sentences, boundaries))
    return docs, table
