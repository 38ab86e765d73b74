"""Round trips and exact byte layouts for the image interchange formats."""

import numpy as np
import pytest

from rayreg import image_io


@pytest.fixture
def image():
    rng = np.random.default_rng(0)
    return rng.random((7, 5)) * 10.0


class TestCsv:
    def test_round_trip_bit_exact(self, image, tmp_path):
        p = tmp_path / "img.csv"
        image_io.write_image_csv(image, p)
        back = image_io.read_image_csv(p)
        assert np.array_equal(back, image)

    def test_ragged_rows_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ValueError, match="line 2"):
            image_io.read_image_csv(p)

    def test_non_numeric_reported_with_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1.0,2.0\n3.0,x\n")
        with pytest.raises(ValueError, match="line 2"):
            image_io.read_image_csv(p)


class TestRrm:
    def test_round_trip_bit_exact(self, image, tmp_path):
        p = tmp_path / "img.rrm"
        image_io.write_image_rrm(image, p)
        back = image_io.read_image_rrm(p)
        assert np.array_equal(back, image)

    def test_header_layout(self, tmp_path):
        p = tmp_path / "img.rrm"
        image_io.write_image_rrm(np.array([[1.0, 2.0]]), p)
        blob = p.read_bytes()
        assert blob[:4] == b"RRM1"
        assert int.from_bytes(blob[4:8], "little") == 1
        assert int.from_bytes(blob[8:12], "little") == 2
        assert len(blob) == 12 + 2 * 8

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.rrm"
        p.write_bytes(b"XXXX" + b"\0" * 16)
        with pytest.raises(ValueError, match="magic"):
            image_io.read_image_rrm(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "short.rrm"
        image_io.write_image_rrm(np.ones((3, 3)), p)
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(ValueError, match="truncated"):
            image_io.read_image_rrm(p)


class TestDispatch:
    def test_by_extension(self, image, tmp_path):
        image_io.write_image_csv(image, tmp_path / "a.csv")
        image_io.write_image_rrm(image, tmp_path / "a.rrm")
        assert np.array_equal(image_io.read_image(tmp_path / "a.csv"), image)
        assert np.array_equal(image_io.read_image(tmp_path / "a.rrm"), image)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            image_io.read_image(tmp_path / "nope.rrm")


class TestPgm:
    def test_exact_bytes(self, tmp_path):
        mask = np.array([[True, False], [False, True], [True, True]])
        p = tmp_path / "m.pgm"
        image_io.write_mask_pgm(mask, p)
        assert p.read_bytes() == b"P5\n2 3\n255\n" + bytes([255, 0, 0, 255, 255, 255])

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        mask = rng.random((9, 4)) < 0.5
        p = tmp_path / "m.pgm"
        image_io.write_mask_pgm(mask, p)
        assert np.array_equal(image_io.read_mask_pgm(p), mask)

    def test_mask_csv(self, tmp_path):
        mask = np.array([[True, False]])
        p = tmp_path / "m.csv"
        image_io.write_mask_csv(mask, p)
        assert p.read_text() == "1,0\n"
