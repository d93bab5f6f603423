"""Command-line entry point.

Subcommands: train, generate, edit, evaluate, analyze-influence, serve,
plot-metrics. Every subcommand honors --seed, merges --config files with
flags (flags win), dumps the effective configuration next to its outputs and
exits 0 on success, 1 on user error, 2 on internal failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, load_generator
from .config import ConfigError, RunConfig
from .data import DataError, build_manifest, load_manifest
from .latent import (
    EditError,
    StructuredLatent,
    from_json,
    interpolate,
    latent_digest,
    replace,
    sample_latent,
    to_json,
)
from .mapping import declared_influence, influence_matrix_text
from .structure import STYLE, CellSelection, ScaleTarget, SlotMask, StructureError
from .training import TrainingDivergedError

EXIT_OK = 0
EXIT_USER = 1
EXIT_INTERNAL = 2

USER_ERRORS = (ConfigError, StructureError, DataError, EditError, CheckpointError,
               FileNotFoundError, NotADirectoryError)


def _save_png(image: np.ndarray, path: Path) -> None:
    from PIL import Image

    arr = np.clip((image + 1.0) * 127.5, 0, 255).round().astype(np.uint8)
    Image.fromarray(arr).save(path)


def _noise_seed_for(latent: StructuredLatent) -> int:
    return latent.rng_seed if latent.rng_seed is not None else 0


def _dump_effective_config(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "effective_config.json").write_text(cfg.canonical_json())


def _dump_command_config(out_dir: Path, command: str, args: dict, gen=None) -> None:
    doc = {"command": command, "args": args}
    if gen is not None:
        doc["generator_config"] = gen.config.to_dict()
    (out_dir / "effective_config.json").write_text(json.dumps(doc, indent=1, sort_keys=True))


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for flag, key in [
        ("seed", "seed"),
        ("grid", "grid"),
        ("local_dim", "local_dim"),
        ("style_dim", "style_dim"),
        ("partition", "partition"),
        ("resolution", "resolution"),
        ("style_start", "style_start"),
        ("mapping_depth", "mapping_depth"),
        ("batch_size", "batch_size"),
        ("lr", "lr"),
        ("r1_gamma", "r1_gamma"),
        ("r1_interval", "r1_interval"),
        ("images_seen", "total_images"),
        ("checkpoint_every", "checkpoint_every"),
        ("metrics_every", "metrics_every"),
        ("metrics_samples", "metrics_samples"),
        ("ppl_samples", "ppl_samples"),
    ]:
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "per_pixel_noise", None) is not None:
        overrides["per_pixel_noise"] = args.per_pixel_noise == "on"
    if getattr(args, "flip", False):
        overrides["flip"] = True
    cfg = cfg.updated(**overrides)
    if cfg.style_start not in (None, "all", "off", "none"):
        int(cfg.style_start)  # raises early on junk like "sometimes"
    return cfg


# ---- subcommands ---------------------------------------------------------------


def cmd_train(args) -> int:
    from .loop import train_loop

    cfg = _config_from_args(args)
    cfg.structure()  # validate before touching the dataset
    cfg.generator_config()
    out_dir = Path(args.out)
    _dump_effective_config(cfg, out_dir)
    data_dir = Path(args.data)
    cache = args.cache or (out_dir / "data_cache")
    try:
        manifest = load_manifest(cache)
    except DataError:
        manifest = build_manifest(data_dir, cfg.resolution, cache_dir=cache)
    if manifest.resolution != cfg.resolution:
        manifest = build_manifest(data_dir, cfg.resolution, cache_dir=cache)
    ckpt = train_loop(cfg, manifest, out_dir, resume_from=args.resume)
    print(f"final checkpoint: {ckpt}")
    return EXIT_OK


def cmd_generate(args) -> int:
    gen, bundle = load_generator(args.checkpoint)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_command_config(out_dir, "generate", {
        "checkpoint": str(args.checkpoint), "seed": args.seed, "count": args.count,
    }, gen)
    manifest = []
    for k in range(args.count):
        seed = args.seed + k
        latent = sample_latent(gen.config.structure, seed)
        image = gen.synthesize(latent, noise_seed=_noise_seed_for(latent))
        png = out_dir / f"gen_{seed:08d}.png"
        sidecar = out_dir / f"gen_{seed:08d}.latent.json"
        _save_png(image, png)
        sidecar.write_text(to_json(latent))
        manifest.append({"seed": seed, "image": png.name, "latent": sidecar.name,
                         "digest": latent_digest(latent)})
    (out_dir / "outputs.json").write_text(json.dumps(
        {"checkpoint": str(args.checkpoint), "count": args.count,
         "base_seed": args.seed, "outputs": manifest}, indent=1))
    print(f"wrote {args.count} image(s) to {out_dir}")
    return EXIT_OK


def parse_edit_spec(spec: str):
    """Parse the edit mini-grammar (version 1).

    ``none`` is the identity edit. Otherwise semicolon-separated fields:
    a target (``cells=(r,c)|(r,c)...``, ``scale=k`` or ``style``), ``op=``
    one of resample/set/interp, and ``arg=`` (seed for resample, JSON values
    or @file for set, ``<latent-path>:<t>`` for interp).
    """
    spec = spec.strip()
    if spec == "none":
        return None
    target = None
    op = None
    arg = None
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if part == "style":
            target = STYLE
        elif part.startswith("cells="):
            cells = []
            for tok in part[len("cells="):].split("|"):
                tok = tok.strip().lstrip("(").rstrip(")")
                r, c = tok.split(",")
                cells.append((int(r), int(c)))
            target = CellSelection(tuple(cells))
        elif part.startswith("scale="):
            target = ScaleTarget(int(part[len("scale="):]))
        elif part.startswith("op="):
            op = part[len("op="):]
        elif part.startswith("arg="):
            arg = part[len("arg="):]
        else:
            raise EditError(f"cannot parse edit-spec field {part!r}")
    if target is None or op is None:
        raise EditError("edit spec needs a target and an op ('none' for identity)")
    if op not in ("resample", "set", "interp"):
        raise EditError(f"unknown op {op!r}")
    if op != "set" and arg is None:
        raise EditError(f"op={op} requires arg=")
    return target, op, arg


def _target_value_shape(structure, target):
    if isinstance(target, CellSelection):
        return (len(target.groups(structure)), structure.local_dim)
    if isinstance(target, ScaleTarget):
        s = structure.shared_scales[target.index]
        return (s.rows, s.cols, s.dim)
    return (structure.style_dim,)


def apply_edit(latent: StructuredLatent, parsed) -> StructuredLatent:
    if parsed is None:
        return latent
    target, op, arg = parsed
    structure = latent.structure
    if op == "resample":
        rng = np.random.default_rng(int(arg))
        values = rng.standard_normal(_target_value_shape(structure, target), dtype=np.float32)
        return replace(latent, target, values)
    if op == "set":
        if arg is None:
            raise EditError("op=set requires arg= with JSON values or @file")
        text = Path(arg[1:]).read_text() if arg.startswith("@") else arg
        values = np.asarray(json.loads(text), dtype=np.float32)
        return replace(latent, target, values)
    # interp
    path, _, t_text = arg.rpartition(":")
    if not path:
        raise EditError("op=interp needs arg=<latent-path>:<t>")
    other = from_json(Path(path).read_text())
    t = float(t_text)
    if isinstance(target, CellSelection):
        mask = SlotMask.for_cells(structure, target)
    elif isinstance(target, ScaleTarget):
        mask = SlotMask.for_scale(target.index)
    else:
        mask = SlotMask.style_only()
    return interpolate(latent, other, t, mask)


def cmd_edit(args) -> int:
    gen, bundle = load_generator(args.checkpoint)
    latent = from_json(Path(args.latent).read_text())
    if latent.structure != gen.config.structure:
        raise StructureError("latent structure does not match the checkpoint")
    parsed = parse_edit_spec(args.replace)
    edited = apply_edit(latent, parsed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_command_config(out_dir, "edit", {
        "checkpoint": str(args.checkpoint), "latent": str(args.latent),
        "replace": args.replace,
    }, gen)
    image = gen.synthesize(edited, noise_seed=_noise_seed_for(edited))
    _save_png(image, out_dir / "edited.png")
    (out_dir / "edited.latent.json").write_text(to_json(edited))
    print(f"edited image and latent written to {out_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .metrics import standard_metric_values
    from .loop import append_metrics_row

    gen, bundle = load_generator(args.checkpoint)
    res = gen.config.output_resolution
    if args.data:
        cache = args.cache or (Path(args.out).parent / "eval_cache")
        try:
            manifest = load_manifest(cache)
            if manifest.resolution != res:
                raise DataError("cache at wrong resolution")
        except DataError:
            manifest = build_manifest(args.data, res, cache_dir=cache)
        n = min(args.samples, manifest.n_images)
        data = np.memmap(manifest.blob_path, dtype="<f4", mode="r",
                         shape=(manifest.n_images, res, res, 3))
        real = np.array(data[:n], dtype=np.float32)
    else:
        # no dataset: score the generator against its own init-seed renders
        from .metrics import GeneratorAdapter

        real = GeneratorAdapter(gen).sample_images(args.samples, seed=args.seed + 999)
    run_cfg = bundle.extra.get("run_config")
    config_hash = RunConfig.from_dict(run_cfg).config_hash if run_cfg else ""
    reports = standard_metric_values(
        gen, real, n_samples=args.samples, ppl_samples=args.ppl_samples,
        seed=args.seed, config_hash=config_hash,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _dump_command_config(out.parent, "evaluate", {
        "checkpoint": str(args.checkpoint), "data": args.data, "samples": args.samples,
        "ppl_samples": args.ppl_samples, "seed": args.seed,
    }, gen)
    out.write_text(json.dumps({k: r.to_dict() for k, r in reports.items()},
                              indent=1, sort_keys=True))
    if args.append_csv:
        row = {k: r.value for k, r in reports.items()}
        row["images_seen"] = bundle.run.images_seen
        append_metrics_row(Path(args.append_csv), row)
    print(f"metric report written to {out}")
    return EXIT_OK


def cmd_analyze_influence(args) -> int:
    if args.checkpoint:
        gen, _ = load_generator(args.checkpoint)
        structure = gen.config.structure
    else:
        structure = _config_from_args(args).structure()
    masks = declared_influence(structure)
    blocks = [influence_matrix_text(structure, slot, cells)
              for slot, cells in sorted(masks.items(), key=lambda kv: repr(kv[0]))]
    text = "\n\n".join(blocks) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.checkpoint, cors=args.cors)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_plot_metrics(args) -> int:
    from .plotting import plot_metrics

    fig, plotted = plot_metrics(args.csv, columns=args.columns.split(",") if args.columns else None)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    print(f"plotted {', '.join(plotted)} to {out}")
    return EXIT_OK


# ---- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridgan", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_config_flags(sp):
        sp.add_argument("--config", help="JSON run-config file (flags win)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--grid", type=int, default=None)
        sp.add_argument("--local-dim", dest="local_dim", type=int, default=None)
        sp.add_argument("--style-dim", dest="style_dim", type=int, default=None)
        sp.add_argument("--partition", choices=["per-pixel", "per-row", "per-column"], default=None)
        sp.add_argument("--resolution", type=int, default=None)
        sp.add_argument("--style-start", dest="style_start", default=None,
                        help="resolution (e.g. 16, 64, 128), 'all' or 'off'")
        sp.add_argument("--mapping-depth", dest="mapping_depth", type=int, default=None)
        sp.add_argument("--per-pixel-noise", dest="per_pixel_noise", choices=["on", "off"], default=None)

    t = sub.add_parser("train", help="train generator + discriminator on an image folder")
    add_config_flags(t)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--cache", default=None)
    t.add_argument("--resume", default=None, help="checkpoint directory to resume from")
    t.add_argument("--images-seen", dest="images_seen", type=int, default=None)
    t.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--r1-gamma", dest="r1_gamma", type=float, default=None)
    t.add_argument("--r1-interval", dest="r1_interval", type=int, default=None)
    t.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, default=None)
    t.add_argument("--metrics-every", dest="metrics_every", type=int, default=None)
    t.add_argument("--metrics-samples", dest="metrics_samples", type=int, default=None)
    t.add_argument("--ppl-samples", dest="ppl_samples", type=int, default=None)
    t.add_argument("--flip", action="store_true")
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("generate", help="sample images + latent sidecars from a checkpoint")
    g.add_argument("--checkpoint", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("edit", help="apply a latent edit and re-render")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--latent", required=True, help="latent sidecar JSON")
    e.add_argument("--replace", required=True,
                   help="edit spec, e.g. 'cells=(3,4)|(3,5);op=resample;arg=7', or 'none'")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_edit)

    ev = sub.add_parser("evaluate", help="compute metrics for a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", default=None, help="real-image folder for FID stats")
    ev.add_argument("--cache", default=None)
    ev.add_argument("--out", required=True, help="metric report JSON path")
    ev.add_argument("--append-csv", dest="append_csv", default=None)
    ev.add_argument("--samples", type=int, default=256)
    ev.add_argument("--ppl-samples", dest="ppl_samples", type=int, default=64)
    ev.add_argument("--seed", type=int, default=0)
    ev.set_defaults(func=cmd_evaluate)

    ai = sub.add_parser("analyze-influence", help="print declared influence masks per code slot")
    add_config_flags(ai)
    ai.add_argument("--checkpoint", default=None)
    ai.add_argument("--out", default=None)
    ai.set_defaults(func=cmd_analyze_influence)

    sv = sub.add_parser("serve", help="HTTP editing service over a checkpoint")
    sv.add_argument("--checkpoint", required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--cors", action="store_true", help="allow any origin (for the explorer UI)")
    sv.set_defaults(func=cmd_serve)

    pm = sub.add_parser("plot-metrics", help="plot metric curves from a training CSV")
    pm.add_argument("--csv", required=True)
    pm.add_argument("--out", required=True)
    pm.add_argument("--columns", default=None, help="comma-separated metric columns")
    pm.set_defaults(func=cmd_plot_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER
    except TrainingDivergedError as e:
        dump = Path("diverged_diagnostics.json")
        if getattr(args, "out", None):
            dump = Path(args.out) / "diverged_diagnostics.json"
        dump.parent.mkdir(parents=True, exist_ok=True)
        dump.write_text(json.dumps(e.diagnostics, indent=1))
        print(f"training diverged: {e} (diagnostics at {dump})", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # pragma: no cover - internal failures
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
