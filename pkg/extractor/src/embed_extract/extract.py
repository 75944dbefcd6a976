"""Top-level extraction: node list in, embedding file plus manifest out."""

from __future__ import annotations

import hashlib
import json
import logging
import os

from .ekge import write_ekge
from .encoders import load_encoder

log = logging.getLogger(__name__)


def read_nodes(path: str) -> list[str]:
    """One node text per line, in graph id order; trailing newline optional."""
    with open(path, "r", encoding="utf-8") as fh:
        texts = fh.read().splitlines()
    if not texts:
        raise ValueError(f"{path} holds no node texts")
    for line_no, text in enumerate(texts, start=1):
        if not text.strip():
            log.warning("%s line %d: empty node text, encoding as-is", path, line_no)
    return texts


def _content_hash(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def extract(
    nodes_file: str,
    encoder_id: str = "pseudo",
    pooling: str = "mean",
    batch_size: int = 32,
    dim: int | None = None,
    out_path: str = "nodes.ekge",
    revision: str = "main",
) -> dict:
    """Encode every node text and write the embedding file plus manifest.

    Returns the manifest dict; the manifest file sits next to the output
    as <out_path>.manifest.json.
    """
    texts = read_nodes(nodes_file)
    encoder = load_encoder(encoder_id, dim=dim, revision=revision)
    data = encoder.encode(texts, pooling=pooling, batch_size=batch_size)
    write_ekge(data, out_path)
    manifest = {
        "encoder": encoder.name,
        "revision": encoder.revision,
        "pooling": pooling,
        "dim": int(data.shape[1]),
        "node_count": int(data.shape[0]),
        "input_sha256": _content_hash(nodes_file),
    }
    manifest_path = out_path + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %d x %d rows to %s", data.shape[0], data.shape[1],
             os.path.abspath(out_path))
    return manifest


def extract_bert_init(
    nodes_file: str,
    encoder_id: str,
    out_path: str,
    batch_size: int = 32,
    dim: int | None = None,
    revision: str = "main",
) -> dict:
    """CLS-pooled variant used to initialize the trainable entity table."""
    return extract(
        nodes_file,
        encoder_id=encoder_id,
        pooling="cls",
        batch_size=batch_size,
        dim=dim,
        out_path=out_path,
        revision=revision,
    )
