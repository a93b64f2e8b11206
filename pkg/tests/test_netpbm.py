import numpy as np
import pytest

from attnfilter import read_image, read_pgm, write_pgm, write_ppm
from attnfilter.errors import FormatError


def test_pgm_roundtrip(tmp_path, rng):
    image = rng.integers(0, 256, size=(13, 9), dtype=np.uint8)
    path = tmp_path / "img.pgm"
    write_pgm(image, path)
    assert np.array_equal(read_pgm(path), image)


def test_ppm_roundtrip(tmp_path, rng):
    image = rng.integers(0, 256, size=(6, 11, 3), dtype=np.uint8)
    path = tmp_path / "img.ppm"
    write_ppm(image, path)
    back = read_image(path)
    assert back.shape == (6, 11, 3)
    assert np.array_equal(back, image)


def test_header_comments_skipped(tmp_path):
    raster = bytes(range(6))
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n3 # inline\n2\n255\n" + raster)
    image = read_pgm(path)
    assert image.shape == (2, 3)
    assert np.array_equal(image.reshape(-1), np.frombuffer(raster, np.uint8))


def test_raster_may_start_with_whitespace_byte(tmp_path):
    # Pixel value 32 (a space) right after the single separator byte.
    path = tmp_path / "w.pgm"
    path.write_bytes(b"P5\n2 1\n255\n" + bytes([32, 10]))
    assert np.array_equal(read_pgm(path), np.array([[32, 10]], dtype=np.uint8))


def test_rejects_wrong_maxval(tmp_path):
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(FormatError):
        read_image(path)


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "p4.pbm"
    path.write_bytes(b"P4\n2 2\n" + bytes(1))
    with pytest.raises(FormatError):
        read_image(path)


def test_rejects_truncated_raster(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(15))
    with pytest.raises(FormatError):
        read_image(path)


def test_rejects_trailing_bytes(tmp_path):
    path = tmp_path / "x.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes(5))
    with pytest.raises(FormatError):
        read_image(path)


def test_read_pgm_rejects_color(tmp_path):
    path = tmp_path / "c.ppm"
    write_ppm(np.zeros((2, 2, 3), np.uint8), path)
    with pytest.raises(FormatError):
        read_pgm(path)


def test_write_pgm_rejects_color():
    with pytest.raises(FormatError):
        write_pgm(np.zeros((2, 2, 3), np.uint8), "/dev/null")


def test_writer_emits_fixed_header(tmp_path):
    path = tmp_path / "h.pgm"
    write_pgm(np.zeros((2, 3), np.uint8), path)
    assert path.read_bytes() == b"P5\n3 2\n255\n" + bytes(6)
