"""Offline node-text embedding extraction.

Runs a sentence encoder over node surface texts (one per line, in graph
id order) and dumps the rows as a binary "EKGE" file plus a JSON
manifest.  A deterministic hash-based pseudo-encoder is included so the
format can be exercised without any model download.
"""

from .encoders import PseudoEncoder, TransformerEncoder, load_encoder
from .extract import extract, extract_bert_init, read_nodes
from .ekge import write_ekge

__all__ = [
    "PseudoEncoder",
    "TransformerEncoder",
    "load_encoder",
    "extract",
    "extract_bert_init",
    "read_nodes",
    "write_ekge",
]

__version__ = "0.1.0"
