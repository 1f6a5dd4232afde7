import cv2
import numpy as np
import pytest

from app.errors import DecodeError, InvalidSizeError
from app.imaging.image import Image
from app.imaging.phantoms import (
    SHEPP_LOGAN_ELLIPSES,
    make_block_phantom,
    make_ct_phantom,
    make_disk_phantom,
    make_phantom,
    make_shepp_logan,
)


def rasterize_ellipses(n):
    """Point-by-point ellipse sum at pixel centers, row 0 at the top."""
    out = np.zeros((n, n))
    for r in range(n):
        for c in range(n):
            x = (2.0 * c + 1.0) / n - 1.0
            y = -((2.0 * r + 1.0) / n - 1.0)
            total = 0.0
            for value, a, b, x0, y0, phi in SHEPP_LOGAN_ELLIPSES:
                cos, sin = np.cos(np.deg2rad(phi)), np.sin(np.deg2rad(phi))
                rot = np.array([[cos, sin], [-sin, cos]]) @ np.array([x - x0, y - y0])
                if (rot[0] / a) ** 2 + (rot[1] / b) ** 2 <= 1.0:
                    total += value
            out[r, c] = min(max(total, 0.0), 1.0)
    return out


def test_block_phantom_values():
    img = make_block_phantom()
    assert img.n == 4
    assert img.pixel_scale_cm == pytest.approx(6.4)
    assert img.pixels[1, 1] == 0.3
    assert img.pixels[1, 2] == 0.4
    assert img.pixels[2, 1] == 0.8
    assert img.pixels[2, 2] == 0.2
    assert img.pixels[0, 0] == 0.0
    assert img.pixels.sum() == pytest.approx(1.7)


def test_shepp_logan_range_and_background():
    assert np.all((make_shepp_logan(8).pixels >= 0) & (make_shepp_logan(8).pixels <= 1))
    assert make_shepp_logan(16).pixels[0, 0] == 0.0


def test_shepp_logan_matches_pointwise_rasterization():
    np.testing.assert_allclose(make_shepp_logan(16).pixels, rasterize_ellipses(16), atol=1e-12)


def test_shepp_logan_rejects_small_sizes():
    with pytest.raises(InvalidSizeError):
        make_shepp_logan(1)


def test_disk_phantom_is_centered():
    img = make_disk_phantom(16)
    assert img.pixels[8, 8] == 0.5
    assert img.pixels[0, 0] == 0.0
    np.testing.assert_array_equal(img.pixels, img.pixels[:, ::-1])
    np.testing.assert_array_equal(img.pixels, img.pixels[::-1, :])


def test_ct_phantom_downsamples_and_normalizes(tmp_path):
    src = tmp_path / "slice.pgm"
    raw = np.arange(64 * 64, dtype=np.uint16).reshape(64, 64) * 7
    cv2.imwrite(str(src), raw)
    img = make_ct_phantom(src, 8)
    assert img.n == 8
    assert img.pixels.min() == pytest.approx(0.0)
    assert img.pixels.max() == pytest.approx(1.0)
    # block means of a ramp stay monotone along rows
    assert np.all(np.diff(img.pixels[:, 0]) > 0)


def test_ct_phantom_flat_source_gives_zeros(tmp_path):
    src = tmp_path / "flat.pgm"
    cv2.imwrite(str(src), np.full((32, 32), 100, dtype=np.uint8))
    np.testing.assert_array_equal(make_ct_phantom(src, 4).pixels, np.zeros((4, 4)))


def test_ct_phantom_two_level_split(tmp_path):
    src = tmp_path / "split.pgm"
    raw = np.full((16, 16), 40, dtype=np.uint8)
    raw[8:, :] = 200
    cv2.imwrite(str(src), raw)
    img = make_ct_phantom(src, 8)
    np.testing.assert_array_equal(img.pixels[:4], np.zeros((4, 8)))
    np.testing.assert_array_equal(img.pixels[4:], np.ones((4, 8)))


def test_ct_phantom_checkerboard_averages_out(tmp_path):
    src = tmp_path / "checker.pgm"
    raw = (np.indices((48, 48)).sum(axis=0) % 2 * 255).astype(np.uint8)
    cv2.imwrite(str(src), raw)
    np.testing.assert_array_equal(make_ct_phantom(src, 24).pixels, np.zeros((24, 24)))


def test_ct_phantom_errors(tmp_path):
    small = tmp_path / "small.pgm"
    cv2.imwrite(str(small), np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(InvalidSizeError):
        make_ct_phantom(small, 8)
    with pytest.raises(DecodeError):
        make_ct_phantom(tmp_path / "missing.pgm", 4)
    junk = tmp_path / "junk.pgm"
    junk.write_bytes(b"not an image")
    with pytest.raises(DecodeError):
        make_ct_phantom(junk, 4)


def test_make_phantom_dispatch():
    assert make_phantom("block", 4).pixels.sum() == pytest.approx(1.7)
    with pytest.raises(InvalidSizeError):
        make_phantom("block", 8)
    with pytest.raises(ValueError):
        make_phantom("ct", 8)
    with pytest.raises(ValueError):
        make_phantom("banana", 8)


def test_image_csv_is_exact(tmp_path):
    img = make_shepp_logan(8)
    back = Image.from_csv(img.to_csv(tmp_path / "sl.csv"))
    np.testing.assert_array_equal(back.pixels, img.pixels)


def test_image_pgm_uses_sidecar_range(tmp_path):
    img = Image(np.array([[-0.5, 0.0], [1.0, 2.5]]))
    path = img.save_pgm(tmp_path / "wide.pgm")
    back = Image.load_pgm(path)
    np.testing.assert_allclose(back.pixels, img.pixels, atol=3.0 / 65535)


def test_image_rejects_non_square():
    with pytest.raises(InvalidSizeError):
        Image(np.zeros((2, 3)))
