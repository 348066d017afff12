import numpy as np
import pytest

from ssrvpr import (
    DatabaseError,
    DescriptorDatabase,
    GlobalDescriptor,
    RefineConfig,
    RefineParams,
    ShapeContextParams,
    load_database,
    params_fingerprint,
    save_database,
)
from ssrvpr.database import MAGIC, VERSION, _HEADER


def make_db(n=4, k=2, m=3, rings=2, seed=0, t=0) -> DescriptorDatabase:
    rng = np.random.default_rng(seed)
    dim = k * m * rings
    descs = []
    for i in range(n):
        v = rng.normal(size=dim)
        descs.append(GlobalDescriptor(v / np.linalg.norm(v), frame_id=i))
    return DescriptorDatabase(
        descs, fingerprint=bytes(range(16)), num_layers=k, sectors=m,
        rings=rings, smoothing_window=t,
    )


class TestFingerprint:
    def test_sensitive_to_every_input(self, categories):
        sc = ShapeContextParams()
        base = params_fingerprint(categories, RefineConfig(), sc, 3)
        assert len(base) == 16
        assert params_fingerprint(categories, RefineConfig(), sc, 2) != base
        assert params_fingerprint(categories, None, sc, 3) != base
        assert params_fingerprint(
            categories, RefineConfig(close_kernel=7), sc, 3
        ) != base
        assert params_fingerprint(
            categories, RefineConfig(), ShapeContextParams(rings=4), 3
        ) != base

    def test_stable_across_calls(self, categories):
        sc = ShapeContextParams(radius=200.0)
        a = params_fingerprint(categories, RefineParams(5, 3, 10, 20, 8), sc, 3)
        b = params_fingerprint(categories, RefineParams(5, 3, 10, 20, 8), sc, 3)
        assert a == b

    def test_refine_config_and_params_are_distinct(self, categories):
        sc = ShapeContextParams()
        frac = params_fingerprint(categories, RefineConfig(), sc, 0)
        absolute = params_fingerprint(
            categories, RefineConfig().resolve(100, 100), sc, 0
        )
        assert frac != absolute


class TestRoundTrip:
    def test_save_load_preserves_everything(self, tmp_path):
        db = make_db(n=5, t=3)
        path = tmp_path / "ref.ssrv"
        save_database(db, path)
        loaded = load_database(path)
        assert len(loaded) == 5
        assert loaded.fingerprint == db.fingerprint
        assert loaded.num_layers == db.num_layers
        assert loaded.sectors == db.sectors
        assert loaded.rings == db.rings
        assert loaded.smoothing_window == 3
        for a, b in zip(db.descriptors, loaded.descriptors):
            assert a.frame_id == b.frame_id
            assert a.empty == b.empty
            # storage is float32
            assert np.allclose(a.values, b.values, atol=1e-6)

    def test_empty_flag_round_trips(self, tmp_path):
        dim = 2 * 3 * 2
        descs = [
            GlobalDescriptor(np.zeros(dim), frame_id=0, empty=True),
            GlobalDescriptor(np.ones(dim) / np.sqrt(dim), frame_id=1),
        ]
        db = DescriptorDatabase(descs, bytes(16), 2, 3, 2)
        path = tmp_path / "db.ssrv"
        save_database(db, path)
        loaded = load_database(path)
        assert loaded.descriptors[0].empty
        assert not loaded.descriptors[1].empty

    def test_header_layout(self, tmp_path):
        db = make_db(n=2, k=8, m=12, rings=5, t=3)
        path = tmp_path / "db.ssrv"
        save_database(db, path)
        blob = path.read_bytes()
        magic, version, k, m, n, t, count, fp = _HEADER.unpack_from(blob, 0)
        assert magic == MAGIC == b"SSRV"
        assert version == VERSION
        assert (k, m, n, t, count) == (8, 12, 5, 3, 2)
        assert fp == bytes(range(16))
        record = 4 + 1 + 4 * 8 * 12 * 5
        assert len(blob) == _HEADER.size + 2 * record

    def test_identical_saves_are_byte_identical(self, tmp_path):
        db = make_db(n=3)
        p1, p2 = tmp_path / "a.ssrv", tmp_path / "b.ssrv"
        save_database(db, p1)
        save_database(db, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestLoadErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ssrv"
        db = make_db()
        save_database(db, path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(blob)
        with pytest.raises(DatabaseError, match="magic"):
            load_database(path)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "trunc.ssrv"
        save_database(make_db(), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-7])
        with pytest.raises(DatabaseError, match="size"):
            load_database(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatabaseError):
            load_database(tmp_path / "nope.ssrv")

    def test_bad_version(self, tmp_path):
        path = tmp_path / "ver.ssrv"
        save_database(make_db(), path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(blob)
        with pytest.raises(DatabaseError, match="version"):
            load_database(path)

    def test_wrong_descriptor_length_rejected(self):
        desc = GlobalDescriptor(np.ones(10), frame_id=0)
        with pytest.raises(DatabaseError, match="K\\*M\\*N"):
            DescriptorDatabase([desc], bytes(16), 2, 3, 2)
