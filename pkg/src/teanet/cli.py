"""Command-line entry point: ``teanet <subcommand> ...``.

Exit codes: 0 success, 2 usage/config, 3 data error, 4 numeric failure, 5 I/O.
"""

import argparse
import hashlib
import json
import logging
import sys

import numpy as np

from teanet import __version__, kernels
from teanet.augmentation import balance
from teanet.config import RunConfig, load_config
from teanet.errors import ConfigError, DataError, NumericError, ShapeError
from teanet.evaluation import format_report, loso_run
from teanet.io import load_dataset, read_segments, write_segments
from teanet.model import Model, build_teanet, feature_maps
from teanet.preprocessing import preprocess
from teanet.synth import SynthSpec, spec_dict, synth_generate
from teanet.training import fit, format_trace

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


def _repro(seed, digest):
    print(f"# teanet {__version__} seed={seed} config={digest} backend={kernels.BACKEND}")


def _run_config(args):
    return load_config(args.config) if getattr(args, "config", None) else RunConfig()


def cmd_synth(args):
    spec = SynthSpec(subjects=args.subjects, seed=args.seed, noise=args.noise,
                     normal_band=tuple(args.normal_band), stressed_band=tuple(args.stressed_band),
                     normal_trials=args.normal_trials, normal_trial_s=args.normal_trial_s,
                     stressed_trials=args.stressed_trials, stressed_trial_s=args.stressed_trial_s,
                     gap_s=args.gap_s, harmonics=not args.no_harmonics, allow_overlap=args.hard)
    digest = hashlib.sha256(json.dumps(spec_dict(spec), sort_keys=True).encode()).hexdigest()[:12]
    _repro(spec.seed, digest)
    path = synth_generate(spec, args.out)
    print(f"wrote {path}")


def cmd_preprocess(args):
    recordings = load_dataset(args.manifest)
    segments = preprocess(recordings, args.window_s)
    fs = recordings[0].fs if recordings else 64.0
    _repro("-", "-")
    write_segments(args.out, segments, fs)
    counts = np.bincount([s.label for s in segments], minlength=2)
    print(f"segments={len(segments)} normal={counts[0]} stressed={counts[1]}")


def cmd_augment(args):
    segments, fs = read_segments(args.segments)
    _repro("-", "-")
    balanced, plan = balance(segments, fs)
    print(f"d={plan.step}")
    counts = np.bincount([s.label for s in balanced], minlength=2)
    print(f"segments={len(balanced)} normal={counts[0]} stressed={counts[1]}")
    write_segments(args.out, balanced, fs)


def cmd_train(args):
    cfg = _run_config(args)
    _repro(cfg.seed, cfg.digest())
    segments, fs = read_segments(args.segments)
    if cfg.eval.augment:
        segments, _ = balance(segments, fs)
    model = build_teanet(cfg.model)
    model, trace = fit(model, segments, cfg.train)
    model.save(args.out)
    text = format_trace(trace)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def cmd_eval_loso(args):
    cfg = _run_config(args)
    if args.no_augment:
        cfg.eval.augment = False
    _repro(cfg.seed, cfg.digest())
    recordings = load_dataset(args.manifest)
    segments = preprocess(recordings, cfg.window_s)
    if recordings:
        cfg.eval.fs = recordings[0].fs
    result = loso_run(segments, cfg.model, cfg.train, cfg.eval)
    header = [f"teanet {__version__}", f"config {cfg.canonical_json()}"]
    text = format_report(result, header)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def cmd_featuremap(args):
    model = Model.load(args.weights)
    _repro(model.config.seed, "-")
    segments, _ = read_segments(args.segments)
    if not 0 <= args.index < len(segments):
        raise DataError(f"segment index {args.index} out of range (file has {len(segments)})")
    maps = feature_maps(model, segments[args.index])
    np.savetxt(args.out, maps, delimiter=",", fmt="%.6g")
    print(f"rows={maps.shape[0]} cols={maps.shape[1]}")


def build_parser():
    p = argparse.ArgumentParser(prog="teanet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"teanet {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--subjects", type=int, default=8)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--normal-band", type=float, nargs=2, default=(1.0, 1.2))
    s.add_argument("--stressed-band", type=float, nargs=2, default=(1.6, 1.8))
    s.add_argument("--normal-trials", type=int, default=1)
    s.add_argument("--normal-trial-s", type=float, default=180.0)
    s.add_argument("--stressed-trials", type=int, default=1)
    s.add_argument("--stressed-trial-s", type=float, default=60.0)
    s.add_argument("--gap-s", type=float, default=30.0)
    s.add_argument("--no-harmonics", action="store_true")
    s.add_argument("--hard", action="store_true", help="allow overlapping class bands")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("preprocess", help="manifest -> normalized segments file")
    s.add_argument("manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--window-s", type=float, default=30.0)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("augment", help="balance classes by sliding-window oversampling")
    s.add_argument("segments")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("train", help="train on a segments file")
    s.add_argument("segments")
    s.add_argument("--config")
    s.add_argument("--out", required=True, help="weights file")
    s.add_argument("--trace", help="also write the loss trace here")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval-loso", help="leave-one-subject-out evaluation")
    s.add_argument("manifest")
    s.add_argument("--config")
    s.add_argument("--out", help="report file")
    s.add_argument("--no-augment", action="store_true")
    s.set_defaults(func=cmd_eval_loso)

    s = sub.add_parser("featuremap", help="export last-stage feature maps as CSV")
    s.add_argument("weights")
    s.add_argument("segments")
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_featuremap)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"teanet: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError) as exc:
        print(f"teanet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"teanet: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"teanet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
