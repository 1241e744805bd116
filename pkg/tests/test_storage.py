import numpy as np
import pytest

from elmpc import storage
from elmpc.elm import Dataset
from elmpc.errors import InvalidDataError
from elmpc.npz import write_npz
from elmpc.paths import StraightPath
from elmpc.sim import Scenario, run_closed_loop


def test_dataset_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = Dataset(rng.normal(size=(20, 8)) * 1e3, rng.normal(size=20) * 1e-5)
    p = tmp_path / "d.csv"
    storage.write_dataset_csv(p, data)
    assert p.read_text().splitlines()[0] == "X,Y,phi,r,vx,vy,s_fl,s_fr,e"
    back = storage.read_dataset_csv(p)
    assert np.array_equal(back.features, data.features) and np.array_equal(back.labels, data.labels)


def test_dataset_bad_rows_reported(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("X,Y,phi,r,vx,vy,s_fl,s_fr,e\n" + ",".join(["1"] * 9) + "\n1,2,3\n"
                 + ",".join(["1"] * 8) + ",abc\n" + ",".join(["1"] * 8) + ",nan\n")
    with pytest.raises(InvalidDataError) as info:
        storage.read_dataset_csv(p)
    assert info.value.rows == [3, 4, 5]
    assert "3, 4, 5" in str(info.value)
    p.write_text("a,b\n")
    with pytest.raises(InvalidDataError, match="header"):
        storage.read_dataset_csv(p)


def test_log_roundtrip(tmp_path, cfg):
    slog = run_closed_loop(Scenario("s", path=StraightPath(), duration=0.2, y0=0.1), cfg.mpc, cfg.vehicle)
    storage.write_log_csv(tmp_path / "log.csv", slog)
    back = storage.read_log_csv(tmp_path / "log.csv")
    assert back.same_values(slog)
    assert back.dt == pytest.approx(cfg.mpc.dt)
    storage.write_log_npz(tmp_path / "log.npz", slog)
    with np.load(tmp_path / "log.npz") as z:
        assert np.array_equal(z["Y"], slog["Y"])


def test_npz_is_byte_reproducible(tmp_path):
    arrays = {"b": np.arange(5.0), "a": np.array("tag")}
    write_npz(tmp_path / "1.npz", arrays)
    write_npz(tmp_path / "2.npz", arrays)
    assert (tmp_path / "1.npz").read_bytes() == (tmp_path / "2.npz").read_bytes()


def test_hashes(tmp_path):
    p = tmp_path / "f"
    p.write_bytes(b"abc")
    assert storage.sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert storage.canonical_hash({"a": 1, "b": 2}) == storage.canonical_hash({"b": 2, "a": 1})
