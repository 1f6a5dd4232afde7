from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from loguru import logger  # noqa: E402

from app.imaging.image import Image  # noqa: E402
from app.recon.variational import QactTrace  # noqa: E402
from app.utils.fs import ensure_dir  # noqa: E402
from app.utils.image import montage, tile, write_png  # noqa: E402

MONTAGE_COLUMNS = ("GT", "QACT", "MLEM", "FBP")
TILE_PX = 96
RESULT_KEYS = ["n", "n_angles", "i0", "method", "rmse"]


def convergence_report(trace: QactTrace, out_dir: Union[str, Path], stem: str = "convergence") -> Tuple[Path, Path]:
    """Write (iteration, rmse, energy) rows and an RMSE-per-iteration line plot."""
    if len(trace) == 0:
        raise ValueError("Cannot report on an empty trace")
    out_dir = ensure_dir(out_dir)
    frame = trace.to_frame()[["iteration", "rmse", "energy"]]
    csv_path = out_dir / f"{stem}.csv"
    frame.to_csv(csv_path, index=False, float_format="%.17g")

    has_rmse = frame["rmse"].notna().all()
    column = "rmse" if has_rmse else "energy"
    values = frame[column].to_numpy()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(frame["iteration"], values, marker="o", markersize=3)
    if np.all(values > 0):
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("RMSE" if has_rmse else "QUBO energy")
    ax.grid(True, alpha=0.3)
    png_path = _save(fig, out_dir, stem)
    logger.info("Convergence report written to {} and {}", csv_path, png_path)
    return csv_path, png_path


def load_results(results: Union[pd.DataFrame, str, Path]) -> pd.DataFrame:
    """Accept a results frame or a results.csv path; i0 comes back numeric with inf for noiseless rows."""
    frame = results.copy() if isinstance(results, pd.DataFrame) else pd.read_csv(results, float_precision="round_trip")
    missing = [c for c in RESULT_KEYS if c not in frame.columns]
    if missing:
        raise ValueError(f"Results table lacks columns {missing}")
    if frame.empty:
        raise ValueError("Cannot report on an empty results table")
    frame["i0"] = pd.to_numeric(frame["i0"])
    return frame


def _panels(sizes: Sequence[int]):
    fig, axes = plt.subplots(1, len(sizes), figsize=(4 * len(sizes), 3.5), squeeze=False)
    return fig, axes[0]


def _save(fig, out_dir: Path, stem: str) -> Path:
    fig.tight_layout()
    png_path = out_dir / f"{stem}.png"
    fig.savefig(png_path, dpi=100)
    plt.close(fig)
    return png_path


def angle_report(results: Union[pd.DataFrame, str, Path], out_dir: Union[str, Path],
                 stem: str = "rmse_vs_angles") -> Tuple[Path, Path]:
    """Noiseless RMSE against gantry angle count, one panel per size and one line per method (seed mean)."""
    frame = load_results(results)
    frame = frame[np.isinf(frame["i0"])]
    if frame.empty:
        raise ValueError("Results table has no noiseless rows")
    table = frame.groupby(["n", "method", "n_angles"], as_index=False)["rmse"].mean()
    out_dir = ensure_dir(out_dir)
    csv_path = out_dir / f"{stem}.csv"
    table.to_csv(csv_path, index=False, float_format="%.17g")

    sizes = sorted(table["n"].unique())
    fig, axes = _panels(sizes)
    for ax, n in zip(axes, sizes):
        for method, rows in table[table["n"] == n].groupby("method"):
            ax.plot(rows["n_angles"], rows["rmse"], marker="o", markersize=4, label=method)
        if (table.loc[table["n"] == n, "rmse"] > 0).all():
            ax.set_yscale("log")
        ax.set_title(f"{n}x{n}")
        ax.set_xlabel("number of angles")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8, loc="best")
    axes[0].set_ylabel("RMSE")
    png_path = _save(fig, out_dir, stem)
    logger.info("Angle report written to {} and {}", csv_path, png_path)
    return csv_path, png_path


def noise_report(results: Union[pd.DataFrame, str, Path], out_dir: Union[str, Path],
                 stem: str = "rmse_vs_i0") -> Tuple[Path, Path]:
    """RMSE against incident photon count I0 per method; noiseless runs draw as dashed levels."""
    frame = load_results(results)
    table = frame.groupby(["n", "n_angles", "method", "i0"], as_index=False)["rmse"].mean()
    noisy = table[np.isfinite(table["i0"])]
    if noisy.empty:
        raise ValueError("Results table has no noisy rows")
    out_dir = ensure_dir(out_dir)
    csv_path = out_dir / f"{stem}.csv"
    table.to_csv(csv_path, index=False, float_format="%.17g")

    panels = sorted({(int(n), int(a)) for n, a in zip(noisy["n"], noisy["n_angles"])})
    fig, axes = _panels(panels)
    for ax, (n, a) in zip(axes, panels):
        here = table[(table["n"] == n) & (table["n_angles"] == a)]
        for method, rows in here.groupby("method"):
            finite = rows[np.isfinite(rows["i0"])]
            line = ax.plot(finite["i0"], finite["rmse"], marker="o", markersize=4, label=method)[0]
            clean = rows.loc[np.isinf(rows["i0"]), "rmse"]
            if not clean.empty:
                ax.axhline(clean.iloc[0], color=line.get_color(), linestyle="--", linewidth=1)
        ax.set_xscale("log")
        ax.set_title(f"{n}x{n}, {a} angles")
        ax.set_xlabel("I0")
        ax.grid(True, alpha=0.3, which="both")
        ax.legend(fontsize=8, loc="best")
    axes[0].set_ylabel("RMSE")
    png_path = _save(fig, out_dir, stem)
    logger.info("Noise report written to {} and {}", csv_path, png_path)
    return csv_path, png_path


def convergence_overlay(traces: Mapping[str, QactTrace], out_dir: Union[str, Path],
                        stem: str = "convergence_overlay") -> Tuple[Path, Path]:
    """One RMSE-per-iteration curve per labelled trace, e.g. one per image size."""
    if not traces or any(len(t) == 0 for t in traces.values()):
        raise ValueError("Cannot overlay empty traces")
    frames = []
    for label, trace in traces.items():
        frame = trace.to_frame()[["iteration", "rmse", "energy"]]
        frame.insert(0, "label", label)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)
    out_dir = ensure_dir(out_dir)
    csv_path = out_dir / f"{stem}.csv"
    table.to_csv(csv_path, index=False, float_format="%.17g")

    column = "rmse" if table["rmse"].notna().all() else "energy"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, rows in table.groupby("label", sort=False):
        ax.plot(rows["iteration"], rows[column], linewidth=1.5, label=label)
    if (table[column] > 0).all():
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("RMSE" if column == "rmse" else "QUBO energy")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend(fontsize=9, loc="best")
    png_path = _save(fig, out_dir, stem)
    logger.info("Convergence overlay written to {} and {}", csv_path, png_path)
    return csv_path, png_path


def write_montage(rows: Sequence[Dict[str, Optional[Image]]], path: Union[str, Path]) -> Path:
    """One row per image size, columns GT | QACT | MLEM | FBP; missing cells stay blank."""
    blank = np.full((TILE_PX, TILE_PX), 255, dtype=np.uint8)
    tiles = [
        [tile(row[c].pixels, TILE_PX) if row.get(c) is not None else blank for c in MONTAGE_COLUMNS]
        for row in rows
    ]
    return write_png(path, montage(tiles, MONTAGE_COLUMNS, TILE_PX))
