"""Command-line interface.

Subcommands: generate-dataset, train, infer, evaluate, sky, serve.
Every run logs its fully resolved configuration (one JSON line) before
doing any work, so a run is reproducible from its log.

Exit codes: 0 success, 2 usage or bad configuration, 3 file or format
problems, 4 numeric failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .bench import (
    BenchError,
    baseline_eval,
    inference_eval,
    reconstruction_eval,
    test_set_eval,
    timing_report,
    write_fronts_csv,
    write_hypervolumes_csv,
    write_scatter_csv,
    write_timings_csv,
    hypervolume_report,
    evaluate_inferences,
)
from .codec import (
    CodecError,
    Dataset,
    DatasetRecord,
    field_to_heightmap,
    read_dataset,
    write_dataset,
)
from .config import ConfigError, PipelineConfig, load_config
from .fileio import FormatError
from .kernels import KernelError
from .latent import LatentError, infer_latent
from .nn import NnError, load_model, train_vae, write_history_csv
from .optimizer import OptimizerError, write_trace_csv
from .pareto import ParetoError
from .pipeline import PipelineError, default_bc_ids, generate_dataset
from .scene import Heightmap, SceneError, boundary_condition_from_id
from .solar import SkyModel, SolarError, winter_sun_samples

log = logging.getLogger("heliogen")

USAGE_ERRORS = (ConfigError,)
IO_ERRORS = (OSError, FormatError, CodecError)
NUMERIC_ERRORS = (
    KernelError,
    SceneError,
    SolarError,
    OptimizerError,
    ParetoError,
    NnError,
    LatentError,
    BenchError,
    PipelineError,
)

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heliogen",
        description="Solar-gain building massing: dataset synthesis, "
                    "VAE training, latent inference, evaluation, serving.",
    )
    parser.add_argument("--config", default=None,
                        help="YAML config path (or HELIOGEN_CONFIG)")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap compiled-kernel worker threads")
    parser.add_argument("--quiet", action="store_true",
                        help="log warnings and errors only")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate-dataset",
                       help="anneal boundary conditions into a dataset file")
    p.add_argument("--bcs", type=int, default=None,
                   help="evenly spaced condition count (default: all)")
    p.add_argument("--steps", type=int, default=None,
                   help="override annealing steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset (.pdgd)")
    p.add_argument("--trace-dir", default=None,
                   help="write per-condition annealing traces as CSV")
    p.set_defaults(func=_cmd_generate_dataset)

    p = sub.add_parser("train", help="train the depth-map VAE")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path (.pdgm)")
    p.add_argument("--log", dest="log_path", default=None,
                   help="write per-epoch losses as CSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer",
                       help="latent-space search for one boundary condition")
    p.add_argument("--model", required=True)
    p.add_argument("--bc-id", type=int, required=True)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--guide", default=None,
                   help="5x5 heightmap CSV pulling the plot region")
    p.add_argument("--lambda", dest="guidance_weight", type=float, default=None,
                   help="guidance weight (requires --guide)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True,
                   help="results file, dataset format, best loss first")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("evaluate",
                       help="score test set, reconstructions, inferences, "
                            "baselines; emit CSV reports")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--samples", type=int, default=100,
                   help="reconstruction samples per record")
    p.add_argument("--random-baselines", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sky", help="inspect the winter sky model")
    sky_sub = p.add_subparsers(dest="sky_action", required=True)
    d = sky_sub.add_parser("dump", help="emit the sun-sample table as CSV")
    d.add_argument("--out", default=None, help="CSV path (default stdout)")
    d.set_defaults(func=_cmd_sky_dump)

    p = sub.add_parser("serve", help="run the HTTP JSON API")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        _cap_threads(args.threads)
        _log_run(args, cfg)
        return int(args.func(args, cfg))
    except USAGE_ERRORS as e:
        log.error("%s", e)
        return EXIT_USAGE
    except IO_ERRORS as e:
        log.error("%s", e)
        return EXIT_IO
    except NUMERIC_ERRORS as e:
        log.error("%s", e)
        return EXIT_NUMERIC


def _cap_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    try:
        import numba

        numba.set_num_threads(n)
    except ImportError:
        pass


def _log_run(args: argparse.Namespace, cfg: PipelineConfig) -> None:
    shown = {k: v for k, v in vars(args).items()
             if k not in ("func",) and v is not None}
    log.info("run %s", json.dumps(shown, sort_keys=True, default=str))
    log.info("config %s", json.dumps(cfg.describe(), sort_keys=True))
    log.info("config_hash %s", cfg.content_hash())


# ------------------------------------------------------------ subcommands


def _cmd_generate_dataset(args, cfg: PipelineConfig) -> int:
    if args.steps is not None:
        cfg = dataclasses.replace(
            cfg, anneal=dataclasses.replace(cfg.anneal, steps=args.steps)
        )
    ids = default_bc_ids(args.bcs, cfg.geometry.positions_per_side)
    on_trace = None
    if args.trace_dir is not None:
        os.makedirs(args.trace_dir, exist_ok=True)

        def on_trace(bc_id, trace):
            path = os.path.join(args.trace_dir, f"trace_{bc_id:04d}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                write_trace_csv(trace, fh)

    def progress(bc_id, n):
        log.info("bc %d annealed, %d records", bc_id, n)

    ds = generate_dataset(ids, cfg, rng_seed=args.seed,
                          progress=progress, on_trace=on_trace)
    write_dataset(ds, args.out)
    log.info("wrote %d records (%d train / %d test) to %s",
             len(ds.records), len(ds.train_records), len(ds.test_records),
             args.out)
    return 0


def _cmd_train(args, cfg: PipelineConfig) -> int:
    tc = cfg.train
    if args.epochs is not None:
        tc = dataclasses.replace(tc, epochs=args.epochs)
    if args.batch is not None:
        tc = dataclasses.replace(tc, batch_size=args.batch)
    if args.lr is not None:
        tc = dataclasses.replace(tc, learning_rate=args.lr)
    ds = read_dataset(args.dataset)
    every = max(1, tc.epochs // 10)

    def progress(stats):
        if stats.epoch % every == 0 or stats.epoch == tc.epochs:
            log.info("epoch %d train %.4f val %.4f",
                     stats.epoch, stats.train_loss, stats.val_loss)

    result = train_vae(ds, tc, rng_seed=args.seed,
                       checkpoint_path=args.out, progress=progress)
    if args.log_path is not None:
        with open(args.log_path, "w", encoding="utf-8", newline="") as fh:
            write_history_csv(result.history, fh)
    log.info("final val loss %.4f, checkpoint %s",
             result.history[-1].val_loss, args.out)
    return 0


def _load_guide(path: str, cfg: PipelineConfig) -> Heightmap:
    heights = np.loadtxt(path, delimiter=",", dtype=np.float64)
    return Heightmap(np.atleast_2d(heights), cfg.geometry)


def _cmd_infer(args, cfg: PipelineConfig) -> int:
    lcfg = cfg.latent
    if args.restarts is not None:
        lcfg = dataclasses.replace(lcfg, restarts=args.restarts)
    if args.guidance_weight is not None:
        if args.guide is None:
            raise ConfigError("--lambda requires --guide")
        lcfg = dataclasses.replace(lcfg, guidance_weight=args.guidance_weight)
    guide = _load_guide(args.guide, cfg) if args.guide is not None else None

    model = load_model(args.model)
    results = infer_latent(model, args.bc_id, lcfg, rng_seed=args.seed,
                           guide=guide, raster=cfg.raster, geom=cfg.geometry)
    bc = boundary_condition_from_id(args.bc_id, cfg.geometry.positions_per_side)
    sky = SkyModel.from_config(cfg.sky)
    scored = evaluate_inferences(results, bc, sky, cfg.raster, cfg.geometry,
                                 cfg.anneal.target_volume)
    scored = sorted(scored, key=lambda r: r.boundary_loss)
    records = tuple(
        DatasetRecord.create(
            args.bc_id,
            field_to_heightmap(r.field, cfg.geometry),
            r.depth,
            r.perf.avg_radiation,
            r.perf.volume,
        )
        for r in scored
    )
    write_dataset(Dataset(records, cfg.raster.world_extent), args.out)
    best = scored[0]
    log.info("best of %d restarts: boundary loss %.4f, radiation %.4f, "
             "volume %.2f -> %s",
             len(scored), best.boundary_loss, best.perf.avg_radiation,
             best.perf.volume, args.out)
    return 0


def _cmd_evaluate(args, cfg: PipelineConfig) -> int:
    ds = read_dataset(args.dataset)
    model = load_model(args.model)
    sky = SkyModel.from_config(cfg.sky)
    raster, geom = cfg.raster, cfg.geometry
    target = cfg.anneal.target_volume

    test_bcs = sorted({r.bc_id for r in ds.test_records})
    core = test_set_eval(ds, sky, raster, geom, target)
    core += reconstruction_eval(model, ds, sky, args.samples, args.seed,
                                raster, geom, target)
    core += inference_eval(model, test_bcs, cfg.latent, sky, args.seed,
                           raster, geom, target)
    groups = list(core)
    for bc_id in test_bcs:
        groups += baseline_eval(bc_id, sky, args.random_baselines, args.seed,
                                raster, geom, target)

    timing_bcs = list(test_bcs)
    for bc_id in sorted({r.bc_id for r in ds.train_records}):
        if len(timing_bcs) >= 3:
            break
        if bc_id not in timing_bcs:
            timing_bcs.append(bc_id)
    report = timing_report(model, timing_bcs, cfg, sky, args.seed)

    os.makedirs(args.out_dir, exist_ok=True)

    def emit(name, writer, payload):
        path = os.path.join(args.out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer(payload, fh)
        log.info("wrote %s", path)

    emit("scatter.csv", write_scatter_csv, groups)
    emit("fronts.csv", write_fronts_csv, groups)
    emit("hypervolumes.csv", write_hypervolumes_csv, hypervolume_report(core))
    emit("timings.csv", write_timings_csv, report)
    log.info("SA/inference wall-clock ratio %.1f", report.ratio)
    return 0


def _cmd_sky_dump(args, cfg: PipelineConfig) -> int:
    samples = winter_sun_samples(cfg.sky)

    def dump(fh):
        fh.write("day,hour,east,north,up,weight\n")
        for s in samples:
            e, n, u = s.direction
            fh.write(f"{s.day},{s.hour!r},{e!r},{n!r},{u!r},{s.weight!r}\n")

    if args.out is None:
        dump(sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            dump(fh)
        log.info("wrote %d sun samples to %s", len(samples), args.out)
    return 0


def _cmd_serve(args, cfg: PipelineConfig) -> int:
    from .service import run_server

    run_server(args.model, cfg, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
