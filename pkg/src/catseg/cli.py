"""Command-line interface: ``catseg {train,segment,evaluate,align,synth,convert}``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.

Training settings resolve as flags > ``--config`` file > built-in defaults.
The config file is flat ``key = value`` text; ``#`` starts a comment.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .data import CorruptionSpec, Document, parse_choi, parse_jsonl, write_choi, write_jsonl
from .embeddings import (
    alignment_residual,
    load_dictionary,
    load_embeddings_text,
    procrustes_align,
    project_table,
    write_embeddings_text,
)
from .errors import CatsegError, ContractError
from .metrics import evaluate, random_baseline
from .model import ModelConfig
from .pipeline import TrainSettings, segment_corpus, train
from .synth import VocabSpec, synth_corpus

log = logging.getLogger("catseg")

VARIANTS = {"cats": True, "tlt-ts": False}


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


# Every overridable setting: key -> (owner, field name, parser).
SETTINGS = {
    **{
        f.name: ("model", f.name, {"dropout": float, "delta_coh": float, "tau": _optional_float, "coherence_enabled": _bool}.get(f.name, int))
        for f in dataclasses.fields(ModelConfig)
    },
    "batch_size": ("train", "batch_size", int),
    "epochs": ("train", "epochs", int),
    "seed": ("train", "seed", int),
    "learning_rate": ("train", "learning_rate", float),
    "checkpoint_every": ("train", "checkpoint_every", int),
    "p1": ("corruption", "p1", float),
    "p2": ("corruption", "p2", float),
    "corruption_seed": ("corruption", "seed", int),
}


class UsageError(Exception):
    pass


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key not in SETTINGS and key != "variant":
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def resolve_settings(args: argparse.Namespace, d_e: int) -> tuple[ModelConfig, TrainSettings, CorruptionSpec, str]:
    """Merge flags, config file and defaults into typed settings."""
    raw = read_config_file(args.config) if args.config else {}
    merged: dict[str, object] = {"d_e": d_e}
    for key, text in raw.items():
        if key == "variant":
            continue
        try:
            merged[key] = SETTINGS[key][2](text)
        except ValueError as exc:
            raise UsageError(f"config key {key}: {exc}") from None
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    variant = args.variant or raw.get("variant")
    if variant is not None:
        if variant not in VARIANTS:
            raise UsageError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
        merged["coherence_enabled"] = VARIANTS[variant]
    groups: dict[str, dict] = {"model": {}, "train": {}, "corruption": {}}
    for key, value in merged.items():
        owner, name, _ = SETTINGS[key]
        groups[owner][name] = value
    model = ModelConfig(**groups["model"])
    variant = "cats" if model.coherence_enabled else "tlt-ts"
    return model, TrainSettings(**groups["train"]), CorruptionSpec(**groups["corruption"]), variant


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_train(args: argparse.Namespace) -> int:
    table = load_embeddings_text(args.embeddings)
    config, settings, corruption, variant = resolve_settings(args, table.dim)
    corpus = parse_jsonl(args.corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out if settings.checkpoint_every else None
    result = train(corpus, table, config, settings, corruption, checkpoint_dir=ckpt_dir)
    embeddings = str(Path(args.embeddings).resolve())
    save_checkpoint(
        out / "checkpoint.ckpt",
        result.params,
        config,
        settings.seed,
        {"variant": variant, "steps": result.steps, "embeddings": embeddings},
    )
    result.log.write(out / "train.log")
    manifest = {
        "version": __version__,
        "variant": variant,
        "seed": settings.seed,
        "model": config.to_dict(),
        "train": dataclasses.asdict(settings),
        "corruption": dataclasses.asdict(corruption),
        "corpus": {"path": str(Path(args.corpus).resolve()), "sha256": sha256_file(args.corpus), "documents": len(corpus)},
        "embeddings": {"path": embeddings, "sha256": sha256_file(args.embeddings)},
        "steps": result.steps,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"trained {variant} for {result.steps} steps -> {out / 'checkpoint.ckpt'}")
    return 0


def read_documents(path: str | Path, fmt: str) -> list[Document]:
    if fmt == "jsonl":
        return parse_jsonl(path)
    path = Path(path)
    if path.is_dir():
        return [parse_choi(p) for p in sorted(path.iterdir()) if p.is_file()]
    return [parse_choi(path)]


def cmd_segment(args: argparse.Namespace) -> int:
    params, config, manifest = load_checkpoint(args.checkpoint)
    emb_path = args.embeddings or manifest["meta"].get("embeddings")
    if not emb_path:
        raise UsageError("checkpoint names no embeddings file; pass --embeddings")
    table = load_embeddings_text(emb_path)
    if table.dim != config.d_e:
        raise ContractError(f"embedding dim {table.dim} does not match checkpoint d_e={config.d_e}")
    docs = read_documents(args.input, args.format)
    results = segment_corpus(docs, table, params, config, tau=args.tau, workers=args.workers)
    with open(args.out, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict()) + "\n")
    print(f"segmented {len(results)} documents (tau={results[0].tau if results else config.threshold})")
    return 0


def read_hypothesis(path: str | Path) -> dict[str, list[int]]:
    """Boundaries per document from segmentation output or a corpus file."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            key = obj.get("doc_id", obj.get("id"))
            if key is None or "boundaries" not in obj:
                raise ContractError(f"{path}:{lineno}: need doc_id (or id) and boundaries")
            out[str(key)] = [int(b) for b in obj["boundaries"]]
    return out


def cmd_evaluate(args: argparse.Namespace) -> int:
    reference = read_documents(args.reference, args.format)
    if args.baseline == "random":
        hypothesis, model_id = random_baseline(reference, seed=args.seed), "random"
    else:
        hypothesis, model_id = read_hypothesis(args.hypothesis), str(args.hypothesis)
    report = evaluate(reference, hypothesis, k=args.k, dataset_id=str(args.reference), model_id=model_id, seed=args.seed)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_align(args: argparse.Namespace) -> int:
    source = load_embeddings_text(args.source_emb)
    target = load_embeddings_text(args.target_emb)
    dictionary = load_dictionary(args.dict)
    projection = procrustes_align(source, target, dictionary)
    write_embeddings_text(project_table(target, projection), args.out)
    residual = alignment_residual(source, target, dictionary, projection.w)
    print(f"pairs used: {projection.pairs_used}")
    print(f"residual ||X_T w - X_S||_F: {residual:.6g}")
    print(f"orthogonality ||w^T w - I||_F: {projection.orthogonality_error():.3g}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = VocabSpec(dim=args.dim)
    docs, table = synth_corpus(
        args.docs,
        topics=args.topics,
        sentences_per_segment_range=(args.min_sentences, args.max_sentences),
        vocab_spec=spec,
        seed=args.seed,
    )
    write_jsonl(docs, args.out_corpus)
    write_embeddings_text(table, args.out_embeddings)
    print(f"wrote {len(docs)} documents and {len(table.word_rows())} word vectors")
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    if args.to == "jsonl":
        write_jsonl(read_documents(args.input, "choi"), args.out)
        return 0
    docs = parse_jsonl(args.input)
    out = Path(args.out)
    if len(docs) == 1 and out.suffix:
        write_choi(docs[0], out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        for doc in docs:
            write_choi(doc, out / f"{doc.id}.txt")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catseg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a CATS or TLT-TS model")
    p.add_argument("--variant", choices=sorted(VARIANTS))
    p.add_argument("--corpus", required=True, help="training corpus (JSONL)")
    p.add_argument("--embeddings", required=True, help="word vectors in text format")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="flat key = value settings file")
    for key, (_, _, kind) in SETTINGS.items():
        if key == "coherence_enabled":
            continue  # set by --variant
        kind = float if kind is _optional_float else kind
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=kind, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="segment documents with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings", help="defaults to the file recorded in the checkpoint")
    p.add_argument("--tau", type=float)
    p.add_argument("--format", choices=["jsonl", "choi"], default="jsonl")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="Pk of a hypothesis (or the random baseline)")
    p.add_argument("--reference", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--hypothesis")
    group.add_argument("--baseline", choices=["random"])
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["jsonl", "choi"], default="jsonl")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("align", help="project target embeddings into the source space")
    p.add_argument("--source-emb", required=True)
    p.add_argument("--target-emb", required=True)
    p.add_argument("--dict", required=True, help="tab-separated source/target word pairs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("synth", help="generate a synthetic corpus and matching embeddings")
    p.add_argument("--docs", type=int, default=250)
    p.add_argument("--topics", type=int, default=8)
    p.add_argument("--min-sentences", type=int, default=3)
    p.add_argument("--max-sentences", type=int, default=7)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-embeddings", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert", help="convert between Choi text files and JSONL")
    p.add_argument("--to", choices=["jsonl", "choi"], required=True)
    p.add_argument("--input", required=True, help="Choi file or directory, or a JSONL corpus")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CatsegError, OSError, ValueError, KeyError) as exc:
        print(f"catseg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
