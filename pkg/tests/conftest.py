import numpy as np
import pytest

from ekgc import graph as graph_mod


def write_tsv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in rows:
            fh.write(f"{h}\t{r}\t{t}\n")


@pytest.fixture
def tiny_graph(tmp_path):
    """4 nodes, 1 relation; valid/test each introduce nothing new except
    'd', which only appears in eval splits (so it is inductive)."""
    write_tsv(tmp_path / "train.tsv", [("a", "r", "b"), ("b", "r", "c")])
    write_tsv(tmp_path / "valid.tsv", [("a", "r", "d")])
    write_tsv(tmp_path / "test.tsv", [("c", "r", "a")])
    return graph_mod.ingest(
        str(tmp_path / "train.tsv"),
        str(tmp_path / "valid.tsv"),
        str(tmp_path / "test.tsv"),
    )


def random_params(n, r, d, k, w, seed):
    from ekgc import decoder

    return decoder.init_params(n, r, d, k, w, seed=seed)


def rel_err(a, b):
    denom = max(abs(a), abs(b), 1e-8)
    return abs(a - b) / denom


def numeric_grad(fn, arr, eps=1e-3):
    """Central finite differences of a scalar function over an array."""
    out = np.zeros(arr.shape, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + eps
        lp = fn()
        arr[idx] = orig - eps
        lm = fn()
        arr[idx] = orig
        out[idx] = (lp - lm) / (2 * eps)
    return out
