"""Pk evaluation, dataset-level window size, and the random baseline."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .data import Document
from .errors import MetricError


def _boundaries(doc) -> list[int]:
    return list(doc.boundaries) if isinstance(doc, Document) else list(doc)


def pk_metric(ref: Sequence[int], hyp: Sequence[int], k: int) -> float:
    """Share of sentence pairs ``(i, i + k)`` judged differently by ``ref`` and ``hyp``.

    Both sequences flag sentences that start a segment. Every window
    position ``i`` in ``[0, n - k)`` is checked, so the result is the exact
    value of the usual sampled estimate.
    """
    n = len(ref)
    if len(hyp) != n:
        raise MetricError(f"reference has {n} sentences, hypothesis {len(hyp)}")
    if n < 2:
        raise MetricError(f"Pk needs at least 2 sentences, got {n}")
    if k < 1 or k >= n:
        raise MetricError(f"window k={k} must satisfy 1 <= k < n={n}")
    ref_seg = np.cumsum(np.asarray(ref, dtype=np.int64))
    hyp_seg = np.cumsum(np.asarray(hyp, dtype=np.int64))
    return kernels.pk_disagreements(ref_seg, hyp_seg, k) / (n - k)


def dataset_k(documents: Iterable) -> int:
    """Half the mean reference segment length, rounded half up, at least 1."""
    sentences = segments = 0
    for doc in documents:
        b = _boundaries(doc)
        sentences += len(b)
        segments += int(np.sum(b))
    if segments == 0:
        raise MetricError("dataset has no segments")
    return max(1, math.floor(sentences / segments / 2 + 0.5))


def boundary_rate(documents: Iterable) -> float:
    sentences = segments = 0
    for doc in documents:
        b = _boundaries(doc)
        sentences += len(b)
        segments += int(np.sum(b))
    if sentences == 0:
        raise MetricError("dataset has no sentences")
    return segments / sentences


def random_baseline(dataset: Sequence[Document], seed: int = 0) -> dict[str, list[int]]:
    """Label each non-first sentence a boundary with the dataset's segments/sentences ratio."""
    p = boundary_rate(dataset)
    rng = np.random.default_rng(seed)
    out = {}
    for doc in dataset:
        flags = (rng.random(len(doc)) < p).astype(int).tolist()
        if flags:
            flags[0] = 1
        out[doc.id] = flags
    return out


@dataclass
class EvalReport:
    dataset: str
    k: int
    pk: float | None
    per_document: list[dict] = field(default_factory=list)
    documents: int = 0
    sentences: int = 0
    segments: int = 0
    skipped: int = 0
    model: str = ""
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def evaluate(
    dataset: Sequence[Document],
    results: Mapping[str, Sequence[int]],
    k: int | None = None,
    dataset_id: str = "",
    model_id: str = "",
    seed: int | None = None,
) -> EvalReport:
    """Macro-averaged Pk over documents long enough for the window.

    ``results`` maps document id to hypothesised boundary flags (or to an
    object with a ``boundaries`` attribute).
    """
    if k is None:
        k = dataset_k(dataset)
    if k < 1:
        raise MetricError(f"k must be >= 1, got {k}")
    per_doc = []
    skipped = 0
    for doc in dataset:
        if doc.id not in results:
            raise MetricError(f"no result for document {doc.id!r}")
        hyp = results[doc.id]
        hyp = list(getattr(hyp, "boundaries", hyp))
        if len(doc) < k + 1:
            skipped += 1
            continue
        per_doc.append({"id": doc.id, "pk": pk_metric(doc.boundaries, hyp, k)})
    macro = float(np.mean([d["pk"] for d in per_doc])) if per_doc else None
    return EvalReport(
        dataset=dataset_id,
        k=k,
        pk=macro,
        per_document=per_doc,
        documents=len(dataset),
        sentences=sum(len(d) for d in dataset),
        segments=sum(d.n_segments for d in dataset),
        skipped=skipped,
        model=model_id,
        seed=seed,
    )
