import numpy as np
import pytest

from gridgan.data import BatchStream, DataError, build_manifest, load_manifest

from .conftest import make_image_dir, write_blob_image


def test_manifest_enumerates_sorted(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 3, size=20)
    m = build_manifest(root, 16, cache_dir=tmp_path / "cache")
    assert [f["name"] for f in m.files] == ["img_00000.png", "img_00001.png", "img_00002.png"]
    assert m.n_images == 3
    assert m.skipped == []
    assert m.blob_path.stat().st_size == 3 * 16 * 16 * 3 * 4


def test_corrupt_file_skipped_not_fatal(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 10, size=20)
    (root / "img_00004.png").write_bytes(b"not a png at all")
    m = build_manifest(root, 16, cache_dir=tmp_path / "cache")
    assert m.n_images == 9
    assert len(m.skipped) == 1
    assert m.skipped[0]["name"] == "img_00004.png"
    assert "img_00004.png" not in [f["name"] for f in m.files]


def test_empty_dataset_fatal(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError):
        build_manifest(tmp_path / "empty", 16, cache_dir=tmp_path / "cache")
    only_bad = tmp_path / "bad"
    only_bad.mkdir()
    (only_bad / "x.png").write_bytes(b"junk")
    with pytest.raises(DataError):
        build_manifest(only_bad, 16, cache_dir=tmp_path / "cache2")


def test_rebuild_unchanged_directory_same_hash(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 5, size=20)
    m1 = build_manifest(root, 16, cache_dir=tmp_path / "c1")
    m2 = build_manifest(root, 16, cache_dir=tmp_path / "c2")
    assert m1.manifest_hash == m2.manifest_hash
    write_blob_image(root / "img_00002.png", 20, np.random.default_rng(99))
    m3 = build_manifest(root, 16, cache_dir=tmp_path / "c3")
    assert m3.manifest_hash != m1.manifest_hash


def test_manifest_save_load_roundtrip(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 4, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    loaded = load_manifest(tmp_path / "cache")
    assert loaded.files == m.files
    assert loaded.resolution == 8
    assert loaded.manifest_hash == m.manifest_hash


def test_cached_values_in_range_and_match_layout(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 6, size=32)
    m = build_manifest(root, 16, cache_dir=tmp_path / "cache")
    data = np.memmap(m.blob_path, dtype="<f4", mode="r", shape=(6, 16, 16, 3))
    assert float(data.min()) >= -1.0
    assert float(data.max()) <= 1.0
    assert data.dtype == np.dtype("<f4")


def test_batches_deterministic(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 12, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    a = BatchStream(m, batch_size=5, seed=3)
    b = BatchStream(m, batch_size=5, seed=3)
    for _ in range(7):
        assert np.array_equal(next(a), next(b))
    c = BatchStream(m, batch_size=5, seed=4)
    assert not np.array_equal(next(BatchStream(m, batch_size=5, seed=3)), next(c))


def test_every_image_exactly_once_per_epoch(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 11, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    stream = BatchStream(m, batch_size=4, seed=0)
    seen = []
    for _ in range(stream.batches_per_epoch):
        seen.extend(next(stream).reshape(-1, 8 * 8 * 3).sum(axis=1).round(4).tolist())
    assert len(seen) == 11
    data = np.memmap(m.blob_path, dtype="<f4", mode="r", shape=(11, 8, 8, 3))
    expect = sorted(np.asarray(data).reshape(11, -1).sum(axis=1).round(4).tolist())
    assert sorted(seen) == expect


def test_short_batch_when_batch_exceeds_dataset(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 3, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    stream = BatchStream(m, batch_size=10, seed=0)
    assert stream.batches_per_epoch == 1
    batch = next(stream)
    assert batch.shape == (3, 8, 8, 3)
    assert stream.epoch == 1


def test_stream_resume_from_state(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 10, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    a = BatchStream(m, batch_size=3, seed=7)
    batches = [next(a) for _ in range(8)]
    b = BatchStream(m, batch_size=3, seed=7)
    for _ in range(5):
        next(b)
    resumed = BatchStream.from_state(m, b.state())
    for k in range(5, 8):
        assert np.array_equal(next(resumed), batches[k])


def test_flip_augmentation_deterministic_and_flipped(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 8, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    a = BatchStream(m, batch_size=8, seed=1, flip=True)
    b = BatchStream(m, batch_size=8, seed=1, flip=True)
    plain = BatchStream(m, batch_size=8, seed=1, flip=False)
    fa, fb, fp = next(a), next(b), next(plain)
    assert np.array_equal(fa, fb)
    # each image is either itself or its mirror
    for k in range(8):
        same = np.array_equal(fa[k], fp[k])
        mirrored = np.array_equal(fa[k], fp[k, :, ::-1, :])
        assert same or mirrored
    flipped_count = sum(not np.array_equal(fa[k], fp[k]) for k in range(8))
    assert 0 < flipped_count < 8  # seed 1 flips some but not all of these


def test_batch_size_validation(tmp_path):
    root = make_image_dir(tmp_path / "imgs", 2, size=20)
    m = build_manifest(root, 8, cache_dir=tmp_path / "cache")
    with pytest.raises(DataError):
        BatchStream(m, batch_size=0, seed=0)
