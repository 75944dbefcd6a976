"""Sentence encoders: a deterministic pseudo-encoder and a transformer path.

The pseudo-encoder maps each text to a unit vector seeded by the
sha256 of the text, so output depends only on the text itself -- never
on batch composition or call order.  The transformer encoder wraps a
pretrained Hugging Face model with CLS or mean pooling; pooling is done
in float64 and cast to float32 at the end.
"""

from __future__ import annotations

import hashlib

import numpy as np

POOLINGS = ("cls", "mean")


def _check_pooling(pooling: str) -> None:
    if pooling not in POOLINGS:
        raise ValueError(f"unknown pooling {pooling!r}; expected one of {POOLINGS}")


class PseudoEncoder:
    """Hash-seeded random unit vectors; no model, fully deterministic."""

    name = "pseudo"
    revision = "sha256-v1"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim

    def encode(self, texts: list[str], pooling: str = "mean",
               batch_size: int = 32) -> np.ndarray:
        _check_pooling(pooling)
        if batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {batch_size}")
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for start in range(0, len(texts), batch_size):
            for offset, text in enumerate(texts[start:start + batch_size]):
                out[start + offset] = self._encode_one(text)
        return out.astype(np.float32)

    def _encode_one(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        vec = np.random.default_rng(seed).standard_normal(self.dim)
        return vec / np.linalg.norm(vec)


class TransformerEncoder:
    """Pretrained LM wrapper with CLS or masked-mean pooling."""

    def __init__(self, model_id: str, revision: str = "main", device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - depends on extras
            raise RuntimeError(
                "transformer encoding needs the [transformer] extra installed"
            ) from exc
        self._torch = torch
        self.name = model_id
        self.revision = revision
        self.tokenizer = AutoTokenizer.from_pretrained(model_id, revision=revision)
        self.model = AutoModel.from_pretrained(model_id, revision=revision)
        self.model.to(device)
        self.model.eval()
        self.device = device
        self.dim = int(self.model.config.hidden_size)

    def encode(self, texts: list[str], pooling: str = "mean",
               batch_size: int = 32) -> np.ndarray:
        _check_pooling(pooling)
        if batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {batch_size}")
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for start in range(0, len(texts), batch_size):
                batch = texts[start:start + batch_size]
                enc = self.tokenizer(batch, padding=True, truncation=True,
                                     return_tensors="pt").to(self.device)
                hidden = self.model(**enc).last_hidden_state.double()
                if pooling == "cls":
                    pooled = hidden[:, 0, :]
                else:
                    mask = enc["attention_mask"].unsqueeze(-1).double()
                    pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
                chunks.append(pooled.cpu().numpy())
        return np.concatenate(chunks, axis=0).astype(np.float32)


def load_encoder(encoder_id: str, dim: int | None = None, revision: str = "main"):
    """'pseudo' (needs dim) or a Hugging Face model id."""
    if encoder_id == "pseudo":
        if dim is None:
            raise ValueError("the pseudo encoder needs an explicit --dim")
        return PseudoEncoder(dim)
    return TransformerEncoder(encoder_id, revision=revision)
