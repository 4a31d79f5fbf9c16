import numpy as np
import pytest

from fastfal.datastore import (
    EmbeddingStore,
    gen_synthetic,
    load_store,
    save_store,
    split,
)
from fastfal.errors import (
    CorruptionError,
    FormatError,
    GenerationError,
    StoreValidationError,
)


def minimal_store():
    return EmbeddingStore(
        features=np.zeros((1, 1), dtype=np.float32),
        labels=np.zeros(1, dtype=np.int64),
        class_count=2,
    )


class TestFormat:
    def test_minimal_file_parses(self, tmp_path):
        path = tmp_path / "one.femb"
        save_store(minimal_store(), path)
        store = load_store(path)
        assert store.n == 1 and store.d == 1 and store.c == 2
        assert store.labels[0] == 0 and store.features[0, 0] == 0.0

    def test_minimal_file_size_arithmetic(self, tmp_path):
        path = tmp_path / "one.femb"
        save_store(minimal_store(), path)
        # 8-byte magic + 12-byte header + one [u32 label][1 x f32] record
        assert path.stat().st_size == 8 + 12 + 8

    def test_save_load_save_is_byte_identical(self, tmp_path, cluster_store):
        a = tmp_path / "a.femb"
        b = tmp_path / "b.femb"
        save_store(cluster_store, a)
        save_store(load_store(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_random_round_trip_equal_fields(self, tmp_path):
        rng = np.random.default_rng(3)
        for trial in range(10):
            n, d, c = rng.integers(1, 40), rng.integers(1, 12), rng.integers(2, 6)
            store = EmbeddingStore(
                features=rng.normal(size=(n, d)).astype(np.float32),
                labels=rng.integers(0, c, size=n),
                class_count=int(c),
            )
            path = tmp_path / f"t{trial}.femb"
            save_store(store, path)
            assert load_store(path) == store

    def test_empty_store_rejected(self):
        with pytest.raises(StoreValidationError):
            EmbeddingStore(
                features=np.zeros((0, 4), dtype=np.float32),
                labels=np.zeros(0, dtype=np.int64),
                class_count=2,
            )

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.femb"
        save_store(minimal_store(), path)
        blob = bytearray(path.read_bytes())
        blob[:8] = b"NOTEMB00"
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            load_store(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "cut.femb"
        save_store(minimal_store(), path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(CorruptionError):
            load_store(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "extra.femb"
        save_store(minimal_store(), path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(FormatError):
            load_store(path)

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "oob.femb"
        save_store(minimal_store(), path)
        blob = bytearray(path.read_bytes())
        blob[20:24] = (7).to_bytes(4, "little")  # label of record 0
        path.write_bytes(bytes(blob))
        with pytest.raises(StoreValidationError):
            load_store(path)

    def test_nan_features_rejected(self):
        feats = np.array([[np.nan, 0.0]], dtype=np.float32)
        with pytest.raises(StoreValidationError):
            EmbeddingStore(features=feats, labels=np.zeros(1, np.int64), class_count=2)


def test_golden_embedder_fixture_loads():
    """Cross-language fixture: a 10-image file produced by the embedder tool
    parses with the expected shape and label order."""
    import pathlib

    path = pathlib.Path(__file__).parent / "data" / "golden_embedder_fixture.femb"
    store = load_store(path)
    assert store.n == 10
    assert store.d == 16
    assert store.c == 2
    assert store.labels.tolist() == [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]


class TestSynthetic:
    def test_sigma_zero_samples_equal_centers(self):
        store = gen_synthetic(c=3, per_class=5, d=8, sigma=0.0, seed=1)
        for cls in range(3):
            block = store.features[store.labels == cls]
            assert np.all(block == block[0])
            assert np.linalg.norm(block[0]) == pytest.approx(1.0, abs=1e-6)

    def test_deterministic_in_seed(self):
        a = gen_synthetic(c=4, per_class=10, d=16, sigma=0.2, seed=42)
        b = gen_synthetic(c=4, per_class=10, d=16, sigma=0.2, seed=42)
        assert a == b
        c = gen_synthetic(c=4, per_class=10, d=16, sigma=0.2, seed=43)
        assert a != c

    def test_nearest_centroid_is_perfect(self):
        store = gen_synthetic(c=4, per_class=100, d=16, sigma=0.1, seed=5)
        centroids = np.stack([
            store.features[store.labels == cls].mean(axis=0) for cls in range(4)
        ])
        dists = ((store.features[:, None, :] - centroids[None]) ** 2).sum(axis=2)
        assert np.all(dists.argmin(axis=1) == store.labels)

    def test_centers_separated(self):
        store = gen_synthetic(c=6, per_class=1, d=32, sigma=0.0, seed=11)
        unit = store.features / np.linalg.norm(store.features, axis=1, keepdims=True)
        cosines = unit @ unit.T
        np.fill_diagonal(cosines, -1.0)
        assert cosines.max() < 0.5

    def test_impossible_separation_raises(self):
        # 50 mutually sub-0.5-cosine directions do not fit in 2 dimensions
        with pytest.raises(GenerationError):
            gen_synthetic(c=50, per_class=1, d=2, sigma=0.1, seed=0)

    def test_bad_params(self):
        with pytest.raises(GenerationError):
            gen_synthetic(c=1, per_class=5, d=4, sigma=0.1, seed=0)
        with pytest.raises(GenerationError):
            gen_synthetic(c=2, per_class=0, d=4, sigma=0.1, seed=0)
        with pytest.raises(GenerationError):
            gen_synthetic(c=2, per_class=5, d=4, sigma=-1.0, seed=0)


class TestSplit:
    def test_zero_fraction_empty_test(self, cluster_store):
        spec = split(cluster_store, 0.0, seed=1)
        assert spec.test_ids.size == 0
        assert spec.train_ids.size == cluster_store.n

    def test_balanced_two_class_arithmetic(self):
        store = gen_synthetic(c=2, per_class=50, d=4, sigma=0.1, seed=2)
        spec = split(store, 0.2, seed=3)
        test_labels = store.labels[spec.test_ids]
        assert spec.test_ids.size == 20
        assert int((test_labels == 0).sum()) == 10
        assert int((test_labels == 1).sum()) == 10

    def test_proportions_match_counting_oracle(self):
        rng = np.random.default_rng(17)
        labels = rng.integers(0, 5, size=400)
        store = EmbeddingStore(
            features=rng.normal(size=(400, 3)).astype(np.float32),
            labels=labels,
            class_count=5,
        )
        spec = split(store, 0.3, seed=9)
        for cls in range(5):
            n_cls = int((labels == cls).sum())
            want = int(np.floor(n_cls * 0.3 + 0.5))
            got = int((store.labels[spec.test_ids] == cls).sum())
            assert got == want

    def test_partition_is_exact(self, cluster_store):
        spec = split(cluster_store, 0.25, seed=4)
        merged = np.concatenate([spec.train_ids, spec.test_ids])
        assert np.array_equal(np.sort(merged), cluster_store.ids)

    def test_deterministic(self, cluster_store):
        a = split(cluster_store, 0.25, seed=8)
        b = split(cluster_store, 0.25, seed=8)
        assert np.array_equal(a.test_ids, b.test_ids)

    def test_small_class_falls_back_unstratified(self):
        feats = np.random.default_rng(0).normal(size=(10, 2)).astype(np.float32)
        labels = np.array([0] * 9 + [1], dtype=np.int64)  # class 1 has one sample
        store = EmbeddingStore(features=feats, labels=labels, class_count=2)
        spec = split(store, 0.4, seed=1)
        assert not spec.stratified
        assert spec.test_ids.size == 4

    def test_bad_fraction(self, cluster_store):
        with pytest.raises(StoreValidationError):
            split(cluster_store, 1.0, seed=0)
