import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from loguru import logger

from app.config.settings import AppSettings
from app.controllers.controller import ExperimentController
from app.errors import ReconError
from app.experiments.metrics import rmse
from app.experiments.report import angle_report, convergence_overlay, convergence_report, noise_report
from app.experiments.spec import ExperimentSpec, i0_label
from app.imaging.image import Image
from app.imaging.noise import NoiseConfig, apply_noise
from app.imaging.phantoms import PHANTOM_KINDS, make_phantom
from app.imaging.projector import Sinogram, build_system_matrix, forward_project, make_geometry
from app.qubo.model import QuboProblem
from app.recon.fbp import fbp_reconstruct
from app.recon.mlem import MlemConfig, mlem_reconstruct
from app.recon.variational import QactConfig, QactTrace, reconstruct
from app.solvers.annealer import AnnealSchedule, SimulatedAnnealingSampler
from app.solvers.exhaustive import ExhaustiveSolver


def parse_i0(text: str) -> Optional[float]:
    if text.lower() in ("inf", "none", "noiseless"):
        return None
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"i0 must be > 0, got {text}")
    return value


def load_image(path: str) -> Image:
    return Image.load_pgm(path) if Path(path).suffix.lower() == ".pgm" else Image.from_csv(path)


def save_image(image: Image, path: Path) -> None:
    """Write path.csv and path.pgm (plus sidecar); path carries no extension."""
    image.to_csv(path.parent / f"{path.name}.csv")
    image.save_pgm(path.parent / f"{path.name}.pgm")
    logger.info("Image written to {}.csv and {}.pgm", path, path)


def schedule_from(args, settings: AppSettings) -> AnnealSchedule:
    return AnnealSchedule(
        n_sweeps=args.sweeps or settings.anneal_sweeps,
        n_reads=args.reads or settings.anneal_reads,
        beta_start=args.beta0 or settings.anneal_beta0,
        beta_end=args.beta1 or settings.anneal_beta1,
        seed=args.seed,
    )


def add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--reads", type=int, default=None)
    p.add_argument("--beta0", type=float, default=None)
    p.add_argument("--beta1", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="run_app.py", description="QUBO-based CT reconstruction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a ground-truth image")
    p.add_argument("--kind", choices=PHANTOM_KINDS, default="shepp_logan")
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--source", default=None, help="grayscale slice for --kind ct")
    p.add_argument("--out", default=None, help="output path without extension")

    p = sub.add_parser("project", help="forward project an image")
    p.add_argument("--image", required=True)
    p.add_argument("--angles", type=int, default=36)
    p.add_argument("--out", required=True, help="sinogram CSV")
    p.add_argument("--matrix", default=None, help="also save the system matrix (.bin or .csv)")

    p = sub.add_parser("noise", help="add Poisson noise to a sinogram")
    p.add_argument("--sinogram", required=True)
    p.add_argument("--i0", type=parse_i0, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="reconstruct with qact, mlem or fbp")
    p.add_argument("--method", choices=("qact", "mlem", "fbp"), default="qact")
    p.add_argument("--sinogram", default=None, help="reconstruct this sinogram instead of simulating")
    p.add_argument("--phantom", choices=PHANTOM_KINDS, default=None)
    p.add_argument("--source", default=None)
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--angles", type=int, default=36)
    p.add_argument("--i0", type=parse_i0, default=None)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--qmax", type=int, default=2)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--k0", type=float, default=1.0)
    p.add_argument("--d0", type=float, default=0.0)
    p.add_argument("--early-stop-width", type=float, default=None, help="stop once the pixel window is narrower")
    p.add_argument("--mlem-iters", type=int, default=400)
    p.add_argument("--mlem-init", type=float, default=0.1)
    p.add_argument("--out-dir", default=None)
    add_sampler_flags(p)

    p = sub.add_parser("grid", help="run an experiment grid")
    p.add_argument("--config", required=True, help="KEY=value experiment file")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("report", help="plots from QACT trace CSVs and/or a grid results.csv")
    p.add_argument("--trace", nargs="+", default=None, metavar="TRACE",
                   help="one trace gives a convergence plot, several give an overlay")
    p.add_argument("--label", nargs="+", default=None, help="overlay labels, one per trace")
    p.add_argument("--results", default=None, help="grid results.csv for angle and noise plots")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--stem", default="convergence")

    p = sub.add_parser("solve-qubo", help="minimize a QUBO text file")
    p.add_argument("--qubo", required=True)
    p.add_argument("--exact", action="store_true", help="exhaustive search instead of annealing")
    add_sampler_flags(p)
    return parser


def cmd_phantom(args, settings: AppSettings) -> int:
    image = make_phantom(args.kind, args.size, args.source or settings.ct_source)
    out = Path(args.out) if args.out else Path(settings.output_dir) / f"phantom_{args.kind}_n{args.size}"
    save_image(image, out)
    return 0


def cmd_project(args, settings: AppSettings) -> int:
    image = load_image(args.image)
    A = build_system_matrix(make_geometry(image.n, args.angles))
    forward_project(A, image).to_csv(args.out)
    logger.info("Sinogram written to {}", args.out)
    if args.matrix:
        if Path(args.matrix).suffix.lower() == ".csv":
            A.to_csv(args.matrix)
        else:
            A.save_binary(args.matrix)
        logger.info("System matrix written to {}", args.matrix)
    return 0


def cmd_noise(args, settings: AppSettings) -> int:
    y = Sinogram.from_csv(args.sinogram)
    if args.i0 is not None:
        y = apply_noise(y, NoiseConfig(args.i0, args.seed))
    y.to_csv(args.out)
    logger.info("Noisy sinogram (i0={}) written to {}", i0_label(args.i0), args.out)
    return 0


def cmd_reconstruct(args, settings: AppSettings) -> int:
    out_dir = Path(args.out_dir or settings.output_dir)
    gt = clean = None
    if args.sinogram:
        y = Sinogram.from_csv(args.sinogram)
        geom = y.geometry
    else:
        kind = args.phantom or ("block" if args.size == 4 else "shepp_logan")
        gt = make_phantom(kind, args.size, args.source or settings.ct_source)
        geom = make_geometry(args.size, args.angles)
    A = build_system_matrix(geom)
    if gt is not None:
        clean = forward_project(A, gt)
        y = clean if args.i0 is None else apply_noise(clean, NoiseConfig(args.i0, args.seed))

    stem = f"recon_{args.method}_n{geom.n}_a{geom.n_angles}_i0{i0_label(args.i0)}_s{args.seed}"
    if args.method == "qact":
        cfg = QactConfig(q_max=args.qmax, c=args.c, k0=args.k0, n_iters=args.iters,
                         sampler=schedule_from(args, settings), d0=args.d0,
                         early_stop_width=args.early_stop_width)
        image, trace = reconstruct(A, y, cfg, gt)
        trace.to_csv(out_dir / f"{stem}_trace.csv")
    elif args.method == "mlem":
        image, _ = mlem_reconstruct(A, y, MlemConfig(args.mlem_iters, args.mlem_init), clean)
    else:
        image = fbp_reconstruct(geom, y)

    save_image(image, out_dir / stem)
    if gt is not None:
        print(f"rmse {rmse(image, gt):.10g}")
    return 0


def cmd_grid(args, settings: AppSettings) -> int:
    if args.workers:
        settings = replace(settings, grid_workers=args.workers)
    spec = ExperimentSpec.from_file(args.config, tuple(settings.seeds))
    sampler = AnnealSchedule(settings.anneal_sweeps, settings.anneal_reads,
                             settings.anneal_beta0, settings.anneal_beta1)
    spec = replace(spec, qact=replace(spec.qact, sampler=sampler),
                   ct_source=spec.ct_source or settings.ct_source or None)
    table = ExperimentController(settings, args.out_dir).run_grid(spec)
    print(table.to_string(index=False))
    return 0


def cmd_report(args, settings: AppSettings) -> int:
    if not args.trace and not args.results:
        raise ValueError("report needs --trace or --results")
    out_dir = args.out_dir or settings.output_dir
    if args.trace:
        labels = args.label or [Path(t).stem for t in args.trace]
        if len(labels) != len(args.trace):
            raise ValueError(f"{len(labels)} labels for {len(args.trace)} traces")
        traces = {label: QactTrace.from_csv(t) for label, t in zip(labels, args.trace)}
        if len(traces) == 1:
            convergence_report(next(iter(traces.values())), out_dir, args.stem)
        else:
            convergence_overlay(traces, out_dir, f"{args.stem}_overlay")
    if args.results:
        made = 0
        for report in (angle_report, noise_report):
            try:
                report(args.results, out_dir)
                made += 1
            except ValueError as e:
                logger.warning("{} skipped: {}", report.__name__, e)
        if not made:
            raise ValueError(f"No plots could be made from {args.results}")
    return 0


def cmd_solve_qubo(args, settings: AppSettings) -> int:
    q = QuboProblem.load(args.qubo)
    if args.exact:
        result = ExhaustiveSolver().sample(q)
    else:
        result = SimulatedAnnealingSampler(schedule_from(args, settings)).sample(q)
    print(f"energy {result.best_energy!r}")
    print("bits " + "".join(str(int(b)) for b in result.best_bits))
    return 0


COMMANDS = {
    "phantom": cmd_phantom,
    "project": cmd_project,
    "noise": cmd_noise,
    "reconstruct": cmd_reconstruct,
    "grid": cmd_grid,
    "report": cmd_report,
    "solve-qubo": cmd_solve_qubo,
}


def main(argv: Optional[List[str]] = None) -> int:
    settings = AppSettings()
    logger.remove()
    logger.add(sys.stderr, level=settings.log_level.upper())

    args = build_parser().parse_args(argv)
    logger.debug("Command {} with {}", args.command, vars(args))
    try:
        return COMMANDS[args.command](args, settings)
    except (ReconError, OSError, ValueError) as e:
        logger.error("{} failed: {}", args.command, e)
        return 1
