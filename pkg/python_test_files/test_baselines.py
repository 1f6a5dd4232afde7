import numpy as np
import pytest

from app.errors import DegenerateGeometryError
from app.experiments.metrics import rmse
from app.imaging.image import Image
from app.imaging.phantoms import make_disk_phantom, pixel_centers
from app.imaging.projector import Sinogram, build_system_matrix, forward_project, make_geometry
from app.recon.fbp import fbp_reconstruct, shepp_logan_kernel
from app.recon.mlem import MlemConfig, mlem_denominator, mlem_reconstruct, mlem_update


def test_mlem_fixed_point(block_system, rng):
    _, A, _ = block_system
    x = rng.uniform(0.1, 1.0, size=16)
    y = Sinogram(A.matrix @ x, A.geometry)
    den, touched = mlem_denominator(A, y, MlemConfig())
    np.testing.assert_allclose(mlem_update(A, x, den, touched), x, rtol=1e-12)


def test_mlem_air_scan_goes_to_zero(block_system):
    geom, A, _ = block_system
    image, trace = mlem_reconstruct(A, Sinogram(np.zeros(A.n_rows), geom), MlemConfig())
    assert rmse(image, Image(np.zeros((4, 4)))) < 1e-2
    assert trace.selected_iter == 400
    assert np.all(np.isnan(trace.projection_rmse))


def test_mlem_block_phantom(block_system):
    _, A, gt = block_system
    y = forward_project(A, gt)
    image, trace = mlem_reconstruct(A, y, MlemConfig(), gt_projection=y)
    assert rmse(image, gt) < 5e-2
    assert np.all(image.pixels > 0) and np.all(trace.final.pixels > 0)
    assert 1 <= trace.selected_iter <= 400
    assert trace.projection_rmse.shape == (400,)
    assert trace.projection_rmse[trace.selected_iter - 1] == np.nanmin(trace.projection_rmse)


def test_mlem_config_validation():
    with pytest.raises(ValueError):
        MlemConfig(max_iters=0)
    with pytest.raises(ValueError):
        MlemConfig(x_init=0.0)


def test_shepp_logan_kernel_shape():
    h = shepp_logan_kernel(8, 0.5)
    assert h.size == 15
    assert h[7] == pytest.approx(2 / (np.pi ** 2 * 0.25))
    np.testing.assert_array_equal(h, h[::-1])
    assert np.all(h[:7] < 0)


def test_fbp_zero_and_linear(rng):
    geom = make_geometry(8, 18)
    zero = fbp_reconstruct(geom, Sinogram(np.zeros(geom.n_rays), geom))
    np.testing.assert_array_equal(zero.pixels, 0.0)

    y1, y2 = rng.uniform(0, 3, geom.n_rays), rng.uniform(0, 3, geom.n_rays)
    combo = fbp_reconstruct(geom, Sinogram(2.5 * y1 - 0.75 * y2, geom)).pixels
    parts = 2.5 * fbp_reconstruct(geom, Sinogram(y1, geom)).pixels - 0.75 * fbp_reconstruct(geom, Sinogram(y2, geom)).pixels
    np.testing.assert_allclose(combo, parts, rtol=1e-9, atol=1e-12)

    doubled = fbp_reconstruct(geom, Sinogram(2.0 * y1, geom)).pixels
    np.testing.assert_array_equal(doubled, 2.0 * fbp_reconstruct(geom, Sinogram(y1, geom)).pixels)


def test_fbp_disk():
    gt = make_disk_phantom(16)
    geom = make_geometry(16, 36)
    A = build_system_matrix(geom)
    image = fbp_reconstruct(geom, forward_project(A, gt))
    assert rmse(image, gt) < 0.15
    X, Y = pixel_centers(16)
    interior = np.hypot(X, Y) * 12.8 < 5.0
    assert image.pixels[interior].mean() == pytest.approx(0.5, rel=0.2)


def test_fbp_needs_two_angles():
    geom = make_geometry(4, 1)
    with pytest.raises(DegenerateGeometryError):
        fbp_reconstruct(geom, Sinogram(np.zeros(geom.n_rays), geom))
