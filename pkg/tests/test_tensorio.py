import numpy as np
import pytest

from spikekit.errors import ContractViolation
from spikekit.tensorio import (read_tensor, read_tensor_csv, write_tensor,
                               write_tensor_csv)


class TestBinaryFormat:
    def test_real_roundtrip(self, tmp_path):
        arr = np.random.default_rng(0).normal(size=(3, 4))
        path = tmp_path / "t.bin"
        write_tensor(path, arr)
        assert np.array_equal(read_tensor(path), arr)

    def test_int_roundtrip(self, tmp_path):
        arr = np.array([[-7, 0], [3, 127]])
        path = tmp_path / "t.bin"
        write_tensor(path, arr)
        loaded = read_tensor(path)
        assert loaded.dtype == np.dtype("<i4")
        assert np.array_equal(loaded, arr)

    def test_header_is_text(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor(path, np.zeros((2, 5)))
        header = path.read_bytes().split(b"\n", 1)[0]
        assert header == b"tensor real64 little 2,5"

    def test_one_dimensional(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor(path, np.arange(7.0))
        assert read_tensor(path).shape == (7,)

    def test_int_overflow_rejected(self, tmp_path):
        with pytest.raises(ContractViolation):
            write_tensor(tmp_path / "t.bin", np.array([2 ** 40]))

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor(path, np.zeros(4))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ContractViolation):
            read_tensor(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "t.bin"
        path.write_bytes(b"not a tensor\n")
        with pytest.raises(ContractViolation):
            read_tensor(path)


class TestCsvFormat:
    def test_roundtrip(self, tmp_path):
        arr = np.array([[1.5, -2.25], [0.0, 1e-9]])
        path = tmp_path / "t.csv"
        write_tensor_csv(path, arr)
        assert np.array_equal(read_tensor_csv(path), arr)

    def test_integer_roundtrip(self, tmp_path):
        arr = np.array([[1, -2], [0, 9]])
        path = tmp_path / "t.csv"
        write_tensor_csv(path, arr)
        assert np.array_equal(read_tensor_csv(path, dtype=np.int64), arr)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("")
        with pytest.raises(ContractViolation):
            read_tensor_csv(path)

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ContractViolation):
            read_tensor_csv(path)
