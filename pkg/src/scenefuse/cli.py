"""Command-line entry point: ``scenefuse <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from .errors import ConfigError, ScenefuseError

log = logging.getLogger("scenefuse")


def _override(text):
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _config(args):
    from .pipeline.config import load_config

    cfg = load_config(args.config)
    changes = dict(getattr(args, "set", None) or [])
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes).validate() if changes else cfg.validate()


def cmd_normals(args):
    from .pointcloud import NeighborhoodQuery, estimate_normals, oracle_normals, read_cloud, write_cloud

    cloud = read_cloud(args.input)
    q = NeighborhoodQuery(args.radius, args.kmax)
    out = oracle_normals(cloud, q) if args.oracle else estimate_normals(cloud, q)
    write_cloud(args.output, out)
    n_valid = int(out.valid.sum())
    print(f"{len(out)} points, {n_valid} normals, {len(out) - n_valid} degenerate -> {args.output}")
    return 0


def cmd_fuse(args):
    from .cma import cma_forward
    from .numerics import value_of
    from .pipeline.features import read_sample_dir, write_feature
    from .pipeline.model import init_params, load_params
    from .tmm import MODALITIES, tmm_forward

    files = read_sample_dir(args.sample_dir)
    cfg = _config(args)
    mats = {k: f.matrix for k, f in files.items()}
    cfg = cfg.replace(**{
        "dims.model": mats["image"].shape[1], "dims.question": mats["question"].shape[1],
        "dims.lidar": mats["lidar"].shape[1], "dims.occ": mats["occ"].shape[1],
        "dims.desc": mats["desc"].shape[1],
    }).validate()
    params = load_params(args.params, cfg) if args.params else init_params(cfg)
    res = tmm_forward(mats["image"], mats["lidar"], mats["occ"], mats["desc"], mats["question"], params.tmm,
                      active=cfg.modalities.as_tuple(), gated=cfg.modules.tmm)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sample_id = files["image"].sample_id
    write_feature(out / "fused.mmdf", value_of(res.fused), "fused", sample_id)
    if cfg.modules.cma:
        f_a = value_of(cma_forward(params.tokens, mats["question"], res.fused, params.cma))
        write_feature(out / "abstract.mmdf", f_a, "abstract", sample_id)
    omega = res.weights.as_dict()
    (out / "weights.json").write_text(json.dumps({"omega": omega, "sample_id": sample_id},
                                                 indent=2, sort_keys=True) + "\n")
    print("omega " + " ".join(f"{m}={omega[m]!r}" for m in MODALITIES)
          + f" sum={sum(omega.values()):.12f}")
    return 0


def cmd_gradcheck(args):
    from .pipeline.gradsuite import FD_STEP, TOLERANCE, run_suite

    seeds = [args.seed] if args.seed is not None else list(range(args.seeds))
    worst = {}
    for seed in seeds:
        for r in run_suite(seed, FD_STEP):
            worst[r.name] = max(worst.get(r.name, 0.0), r.max_rel_error)
    for name, err in worst.items():
        print(f"{name:22s} {err:.3e}")
    top = max(worst.values())
    ok = top < TOLERANCE
    print(f"max relative error {top:.3e} over seeds {seeds[0]}..{seeds[-1]} "
          f"({'PASS' if ok else 'FAIL'} < {TOLERANCE:g})")
    return 0 if ok else 1


def cmd_train_toy(args):
    from .pipeline.model import save_params
    from .pipeline.report import train_table, write_train_report
    from .pipeline.train import train_toy

    cfg = _config(args)
    report, params = train_toy(cfg)
    print(train_table(report), end="")
    if args.out:
        paths = write_train_report(args.out, report)
        save_params(Path(args.out) / "params.npz", params)
        print(f"wrote {', '.join(p.name for p in paths.values())}, params.npz to {args.out}")
    return 0


def cmd_ablate(args):
    from .pipeline.ablate import run_ablation
    from .pipeline.report import ablation_table, write_ablation_report

    cfg = _config(args)
    if args.epochs is not None:
        cfg = cfg.replace(**{"ablate.epochs": args.epochs})
    rows = run_ablation(cfg, tuple(args.groups))
    print(ablation_table(rows), end="")
    if args.out:
        paths = write_ablation_report(args.out, rows)
        print(f"wrote {', '.join(p.name for p in paths.values())} to {args.out}")
    return 0


def cmd_describe(args):
    from .scene_desc import CachedClient, EndpointConfig, HttpClient, MockClient, ViewSet, describe_scene

    views = ViewSet.from_dir(args.views_dir)
    if args.mock:
        client = MockClient()
    else:
        client = HttpClient(EndpointConfig.from_env(base_url=args.endpoint, model=args.model,
                                                    timeout=args.timeout))
    if args.cache_dir:
        client = CachedClient(client, args.cache_dir)
    view_t = Path(args.view_template).read_text() if args.view_template else None
    scene_t = Path(args.scene_template).read_text() if args.scene_template else None
    desc = describe_scene(views, client, view_t, scene_t)
    text = desc.to_json(timestamps=args.timestamps)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{len(views)} views -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="scenefuse", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("normals", help="estimate per-point normals of a point cloud")
    s.add_argument("--input", required=True, help="ASCII xyz or binary .mmpc cloud")
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--kmax", type=int, default=16)
    s.add_argument("--output", required=True, help=".mmpc for binary, anything else for ASCII")
    s.add_argument("--oracle", action="store_true", help="use exhaustive search + Jacobi reference path")
    s.set_defaults(fn=cmd_normals)

    s = sub.add_parser("fuse", help="run gated fusion and abstraction on one sample directory")
    s.add_argument("--config", help="JSON or TOML run config (defaults if omitted)")
    s.add_argument("--sample-dir", required=True, help="directory of .mmdf feature files")
    s.add_argument("--out", required=True)
    s.add_argument("--params", help="params.npz written by train-toy")
    s.add_argument("--seed", type=int)
    s.set_defaults(fn=cmd_fuse)

    s = sub.add_parser("gradcheck", help="finite-difference check of every differentiable op")
    s.add_argument("--seed", type=int, help="check a single seed")
    s.add_argument("--seeds", type=int, default=10, help="number of seeds when --seed is not given")
    s.set_defaults(fn=cmd_gradcheck)

    for name, fn, help_ in (("train-toy", cmd_train_toy, "train on the synthetic routing task"),
                            ("ablate", cmd_ablate, "modality / module / token-count ablation grid")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config")
        s.add_argument("--seed", type=int)
        s.add_argument("--set", type=_override, action="append", metavar="KEY=VALUE",
                       help="dotted config override, e.g. optimizer.epochs=50")
        s.add_argument("--out", help="directory for JSON/text report and figures")
        s.set_defaults(fn=fn)
        if name == "ablate":
            s.add_argument("--epochs", type=int, help="epochs per ablation cell")
            s.add_argument("--groups", nargs="+", default=["modalities", "modules", "tokens"],
                           choices=["modalities", "modules", "tokens"])

    s = sub.add_parser("describe", help="two-stage multi-view scene description")
    s.add_argument("--views-dir", required=True)
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--mock", action="store_true")
    src.add_argument("--endpoint", help="OpenAI-compatible base URL (or set MMDRIVE_GEN_URL)")
    s.add_argument("--model", help="model name (or MMDRIVE_GEN_MODEL)")
    s.add_argument("--timeout", type=float)
    s.add_argument("--cache-dir")
    s.add_argument("--view-template")
    s.add_argument("--scene-template")
    s.add_argument("--timestamps", action="store_true", help="add start/finish times to meta")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_describe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ScenefuseError, OSError, KeyError) as e:
        if isinstance(e, ConfigError) or args.verbose < 2:
            print(f"error: {e}", file=sys.stderr)
        else:
            log.exception("failed")
        return 1


if __name__ == "__main__":
    sys.exit(main())
