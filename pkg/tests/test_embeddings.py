import numpy as np
import pytest

from ekgc import embeddings as em
from ekgc.errors import FormatError, ValidationError

# 32 / (sqrt(14) * sqrt(77)), evaluated with the decimal module at 50 digits
COSINE_123_456 = 0.97463184619707627107857249112612286349885264486478


def test_load_save_round_trip_bitwise(tmp_path):
    m = em.random_init(7, 5, seed=11, scale=0.5)
    path = str(tmp_path / "m.ekge")
    em.save_embeddings(m, path)
    m2 = em.load_embeddings(path, expected_rows=7)
    assert np.array_equal(m.data, m2.data)


def test_load_small_matrix(tmp_path):
    data = np.arange(12, dtype=np.float32).reshape(3, 4) + 1
    path = str(tmp_path / "m.ekge")
    em.save_embeddings(em.matrix(data), path)
    m = em.load_embeddings(path)
    assert m.rows == 3 and m.dim == 4
    assert np.array_equal(m.data, data)


def test_row_count_mismatch_names_both_counts(tmp_path):
    path = str(tmp_path / "m.ekge")
    em.save_embeddings(em.random_init(3, 4, seed=0, scale=1.0), path)
    with pytest.raises(FormatError, match=r"3.*5|5.*3"):
        em.load_embeddings(path, expected_rows=5)


def test_nan_rejected_naming_row(tmp_path):
    data = np.ones((4, 3), dtype=np.float32)
    data[2, 1] = np.nan
    path = str(tmp_path / "m.ekge")
    with open(path, "wb") as fh:
        import struct

        fh.write(b"EKGE" + struct.pack("<HII", 1, 4, 3))
        fh.write(data.tobytes())
    with pytest.raises(ValidationError, match="row 2"):
        em.load_embeddings(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "x.ekge"
    path.write_bytes(b"XXXX" + b"\x00" * 10)
    with pytest.raises(FormatError, match="magic"):
        em.load_embeddings(str(path))


def test_cosine_identity_and_orthogonality():
    v = np.array([0.3, -1.2, 4.0])
    assert em.cosine(v, v) == pytest.approx(1.0, abs=1e-12)
    assert em.cosine([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_against_high_precision_oracle():
    got = em.cosine([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert got == pytest.approx(COSINE_123_456, abs=1e-12)


def test_cosine_symmetry_and_scale_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.normal(size=6)
        b = rng.normal(size=6)
        assert em.cosine(a, b) == em.cosine(b, a)
        for alpha in (2.0, 1e6):
            assert em.cosine(alpha * a, b) == pytest.approx(em.cosine(a, b), abs=1e-6)


def test_cosine_rejects_zero_vector_and_mismatch():
    with pytest.raises(ValidationError):
        em.cosine([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValidationError):
        em.cosine([1.0, 0.0], [1.0, 0.0, 0.0])


def test_random_init_deterministic_and_bounded():
    a = em.random_init(10, 4, seed=3, scale=0.1)
    b = em.random_init(10, 4, seed=3, scale=0.1)
    c = em.random_init(10, 4, seed=4, scale=0.1)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)
    assert np.abs(a.data).max() <= 0.1


def test_random_init_rejects_bad_args():
    with pytest.raises(ValidationError):
        em.random_init(0, 4, seed=0, scale=1.0)
    with pytest.raises(ValidationError):
        em.random_init(4, 4, seed=0, scale=0.0)


def test_normalize_is_idempotent_bitwise():
    m = em.random_init(6, 8, seed=9, scale=2.0)
    n1 = em.normalize(m)
    n2 = em.normalize(n1)
    assert n2 is n1
    norms = np.linalg.norm(n1.data.astype(np.float64), axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-5)


def test_normalize_rejects_zero_row():
    data = np.ones((3, 2), dtype=np.float32)
    data[1] = 0.0
    with pytest.raises(ValidationError, match="row 1"):
        em.normalize(em.matrix(data))


def test_normalized_flag_validated_on_construction():
    with pytest.raises(ValidationError):
        em.matrix(np.full((2, 2), 3.0, dtype=np.float32), normalized=True)
