"""Command-line front end: encode images, build pools, retrieve, analyze.

Commands:
  encode      image file -> resolution-layer bitstream container
  build-pool  bitstream container(s) -> pool + reference dictionary + manifest
  retrieve    progressive retrieval over the simulated sequencer
  analyze     read-cost tables from telemetry or the published fixture
  serve       HTTP/SSE session service
"""

import argparse
import pathlib
import sys

import numpy as np

from . import cost, orchestrator, pool as pool_mod, pyramid, sequencer
from .exceptions import DnapixError


def _load_image(path):
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    return pyramid.Image.from_array(arr)


def _save_image(image, path):
    from PIL import Image as PILImage

    mode = "L" if image.channels == 1 else "RGB"
    PILImage.fromarray(image.plane(), mode=mode).save(path)


def cmd_encode(args):
    image = _load_image(args.image)
    image_id = args.image_id or pathlib.Path(args.image).stem
    layers = pyramid.build_pyramid(image, args.levels)
    bitstreams = pyramid.encode_layers(layers, image_id)
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{image_id}.hpx"
    pyramid.write_bitstreams(out, bitstreams)
    total = sum(len(b.payload) for b in bitstreams)
    print(f"{image_id}: {len(bitstreams)} layers, {total} payload bytes -> {out}")
    return 0


def cmd_build_pool(args):
    dictionary = pool_mod.ReferenceDictionary()
    the_pool = pool_mod.Pool()
    manifest = {}
    for path in args.bitstreams:
        bitstreams = pyramid.read_bitstreams(path)
        manifest.update(
            orchestrator.build_pool_from_bitstreams(
                bitstreams,
                dictionary,
                the_pool,
                seed=args.seed,
                blocks_per_molecule=args.blocks_per_molecule,
            )
        )
    pool_mod.write_pool(the_pool, args.pool)
    dictionary.save(args.dict)
    orchestrator.write_manifest(args.manifest, manifest)
    print(
        f"{the_pool.total_molecules()} molecules over {len(dictionary)} layers "
        f"-> {args.pool}"
    )
    return 0


def _load_state(args):
    the_pool = pool_mod.read_pool(args.pool)
    dictionary = pool_mod.ReferenceDictionary.load(args.dict)
    manifest = orchestrator.read_manifest(args.manifest)
    return the_pool, dictionary, manifest


def cmd_retrieve(args):
    the_pool, dictionary, manifest = _load_state(args)
    params = sequencer.SamplingParams(coverage_target=args.coverage)
    model = sequencer.ErrorModel(
        args.error_rate, args.error_rate, args.error_rate, seed=args.seed
    )
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    session = orchestrator.RetrievalSession(
        the_pool,
        dictionary,
        manifest,
        args.image,
        params=params,
        model=model,
        seed=args.seed,
    )
    event = session.start()
    while True:
        preview = out_dir / f"{args.image}_L{event.layer}.png"
        preview.write_bytes(event.preview_png)
        print(
            f"L{event.layer}: {event.width}x{event.height}, "
            f"cost {event.cost_nt} nt, remaining gain {event.gain_estimate:.2f}x "
            f"-> {preview}"
        )
        if session.state != orchestrator.STATE_AWAITING:
            break
        if args.max_layer is not None and session.current_layer >= args.max_layer:
            session.stop()
            print("stopped at --max-layer")
            break
        if not args.auto:
            answer = input("advance to next layer? [Y/n] ").strip().lower()
            if answer in ("n", "no", "stop"):
                session.stop()
                print("stopped by operator")
                break
        event = session.advance()
    report = session.cost_report()
    print(cost.render_table(report))
    if args.csv:
        cost.write_csv(report, args.csv)
        print(f"report -> {args.csv}")
    telemetry = sequencer.SessionTelemetry()
    for t in session.telemetries:
        for ev in t.events:
            telemetry.record(ev)
    tel_path = out_dir / f"{args.image}_telemetry.tsv"
    sequencer.write_telemetry(telemetry, tel_path)
    print(f"telemetry -> {tel_path}")
    return 0


def cmd_analyze(args):
    if args.reference_fixture:
        report = cost.theoretical_report(cost.reference_fixture())
    else:
        if not (args.telemetry and args.pool and args.dict and args.image):
            raise DnapixError(
                "analyze needs --reference-fixture or "
                "--telemetry with --pool/--dict/--image"
            )
        the_pool = pool_mod.read_pool(args.pool)
        dictionary = pool_mod.ReferenceDictionary.load(args.dict)
        params = sequencer.SamplingParams(coverage_target=args.coverage)
        inputs = orchestrator.pool_cost_inputs(
            the_pool, dictionary, args.image, params
        )
        telemetries = [sequencer.read_telemetry(p) for p in args.telemetry]
        report = cost.simulated_cost(telemetries, inputs)
    print(cost.render_table(report))
    if args.csv:
        cost.write_csv(report, args.csv)
        print(f"report -> {args.csv}")
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    the_pool, dictionary, manifest = _load_state(args)
    model = sequencer.ErrorModel(
        args.error_rate, args.error_rate, args.error_rate, seed=args.seed
    )
    app = create_app(
        the_pool,
        dictionary,
        manifest,
        params=sequencer.SamplingParams(coverage_target=args.coverage),
        model=model,
        seed=args.seed,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dnapix",
        description="image storage on simulated DNA with progressive retrieval",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="image -> layer bitstream container")
    p.add_argument("image")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--image-id", default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("build-pool", help="bitstreams -> oligo pool")
    p.add_argument("bitstreams", nargs="+")
    p.add_argument("--dict", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--blocks-per-molecule",
        type=int,
        default=pool_mod.DEFAULT_BLOCKS_PER_MOLECULE,
    )
    p.set_defaults(func=cmd_build_pool)

    p = sub.add_parser("retrieve", help="progressive retrieval of one image")
    p.add_argument("--pool", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--max-layer", type=int, default=None)
    p.add_argument("--auto", action="store_true", help="run all layers, no pauses")
    p.add_argument("--coverage", type=float, default=10.0)
    p.add_argument("--error-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("analyze", help="read-cost tables")
    p.add_argument("--telemetry", nargs="*", default=None)
    p.add_argument("--pool")
    p.add_argument("--dict")
    p.add_argument("--image")
    p.add_argument("--coverage", type=float, default=10.0)
    p.add_argument(
        "--reference-fixture",
        action="store_true",
        help="render the published per-layer oligo-count fixture",
    )
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="HTTP/SSE session service")
    p.add_argument("--pool", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--coverage", type=float, default=10.0)
    p.add_argument("--error-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DnapixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
