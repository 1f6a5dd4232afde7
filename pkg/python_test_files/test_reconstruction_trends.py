"""Multi-minute reconstruction trends; run with ``pytest -m slow``."""
from dataclasses import replace

import numpy as np
import pytest

from app.experiments.metrics import rmse
from app.imaging.noise import NoiseConfig, apply_noise
from app.imaging.phantoms import make_shepp_logan
from app.imaging.projector import build_system_matrix, forward_project, make_geometry
from app.recon.fbp import fbp_reconstruct
from app.recon.mlem import MlemConfig, mlem_reconstruct
from app.recon.variational import QactConfig, reconstruct
from app.solvers.annealer import AnnealSchedule

pytestmark = pytest.mark.slow


def shepp_logan_case(n, n_angles):
    gt = make_shepp_logan(n)
    geom = make_geometry(n, n_angles)
    A = build_system_matrix(geom)
    return gt, geom, A, forward_project(A, gt)


def qact(A, y, gt, seed):
    cfg = replace(QactConfig(), sampler=AnnealSchedule(seed=seed))
    return reconstruct(A, y, cfg, gt)


def test_convergence_curve_decreases():
    gt, _, A, y = shepp_logan_case(8, 36)
    _, trace = qact(A, y, gt, seed=0)
    assert trace[29].rmse < trace[0].rmse


def test_many_angles_qact_beats_fbp():
    gt, geom, A, y = shepp_logan_case(16, 36)
    image, _ = qact(A, y, gt, seed=0)
    assert rmse(image, gt) < rmse(fbp_reconstruct(geom, y), gt)


def test_few_angles_mlem_beats_qact():
    gt, _, A, y = shepp_logan_case(16, 3)
    mlem_image, _ = mlem_reconstruct(A, y, MlemConfig(), gt_projection=y)
    mlem_err = rmse(mlem_image, gt)
    wins = sum(mlem_err < rmse(qact(A, y, gt, seed)[0], gt) for seed in range(3))
    assert wins >= 2


def test_qact_error_falls_with_dose():
    gt, _, A, clean = shepp_logan_case(16, 36)
    medians = []
    for i0 in (1e1, 1e3, 1e6):
        errors = [rmse(qact(A, apply_noise(clean, NoiseConfig(i0, seed)), gt, seed)[0], gt) for seed in range(3)]
        medians.append(np.median(errors))
    assert medians[0] > medians[1] > medians[2]
