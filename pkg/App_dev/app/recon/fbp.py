"""Fan-beam FBP for an equispaced flat detector with the Shepp-Logan kernel.

Detector samples are rescaled to a virtual detector through the isocenter
(pitch tau = spacing * R / SDD, R the source radius), cosine weighted by
R / sqrt(R^2 + s^2), convolved in space with

    h[k] = 2 / (pi^2 tau^2 (1 - 4 k^2))

(times tau), then backprojected pixel by pixel with linear interpolation and
the 1 / U^2 distance weight. The full 360 degree scan counts every ray twice,
hence the global factor 1/2 next to the angular step.
"""
import numpy as np

from app.errors import DegenerateGeometryError, DimensionMismatchError
from app.imaging.image import Image
from app.imaging.projector import Geometry, Sinogram


def shepp_logan_kernel(n_det: int, tau: float) -> np.ndarray:
    """Kernel taps for k = -(n_det - 1) .. n_det - 1."""
    k = np.arange(-(n_det - 1), n_det, dtype=float)
    return 2.0 / (np.pi ** 2 * tau ** 2 * (1.0 - 4.0 * k ** 2))


def filter_projections(geom: Geometry, table: np.ndarray) -> np.ndarray:
    R = geom.source_radius_cm
    mag = R / geom.sdd_cm
    tau = geom.det_spacing_cm * mag
    s = geom.element_offsets_cm() * mag
    weighted = table * (R / np.sqrt(R ** 2 + s ** 2))[None, :]
    h = shepp_logan_kernel(geom.n_det, tau)
    lo = geom.n_det - 1
    return np.stack([np.convolve(row, h, mode="full")[lo:lo + geom.n_det] * tau for row in weighted])


def fbp_reconstruct(geom: Geometry, y: Sinogram) -> Image:
    if geom.n_angles < 2:
        raise DegenerateGeometryError(f"FBP needs at least 2 gantry angles, got {geom.n_angles}")
    if len(y) != geom.n_rays:
        raise DimensionMismatchError(f"Sinogram has {len(y)} values, geometry {geom.n_rays} rays")

    R = geom.source_radius_cm
    s = geom.element_offsets_cm() * (R / geom.sdd_cm)
    filtered = filter_projections(geom, y.values.reshape(geom.n_angles, geom.n_det))

    pitch = geom.image_side_cm / geom.n
    centers = -geom.image_side_cm / 2.0 + (np.arange(geom.n) + 0.5) * pitch
    X, Y = np.meshgrid(centers, -centers)

    img = np.zeros((geom.n, geom.n))
    for a, th in enumerate(geom.angles_rad):
        depth = R + X * np.sin(th) - Y * np.cos(th)  # source-to-pixel distance along the central ray
        s_pix = R * (X * np.cos(th) + Y * np.sin(th)) / depth
        img += np.interp(s_pix, s, filtered[a], left=0.0, right=0.0) * (R / depth) ** 2
    img *= (2.0 * np.pi / geom.n_angles) / 2.0
    return Image(img)
