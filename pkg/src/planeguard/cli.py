"""planeguard command line.

Exit codes: 0 success, 1 usage error, 2 data error (bad files or
parameter values), 3 internal error. Results go to stdout, progress and
diagnostics to stderr. Report-writing commands also render a PNG figure
next to the CSV unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bitplanes import EncryptionParams, encrypt_planes, shift_planes, zero_planes
from .classifier import (
    LabeledFeatureSet,
    cv_lambda,
    evaluate,
    labels_to_values,
    load_model,
    save_model,
    train,
)
from .errors import DataFormatError, PlaneguardError
from .experiments import (
    ExperimentConfig,
    _row_to_strings,
    extract_manifest_features,
    ingest_manifest,
    read_report_csv,
    run_forensics_experiment,
    synthesize_dataset,
    tradeoff_report,
    write_report_csv,
)
from .features import read_feature_file, roster_hash, write_feature_csv, write_feature_file
from .figures import render_report_figure, render_tradeoff_figure
from .fileio import atomic_write_text, read_image, write_pgm
from .keystream import derive_nonce, parse_key_hex, parse_nonce_hex
from .residuals import AXES, DIRECTIONS, KERNEL_KINDS, directional_residual, format_residual, kernel_residual

log = logging.getLogger("planeguard")

KEY_ENV = "PLANEGUARD_KEY"


class _UsageError(Exception):
    """Maps to exit code 1 (caller misuse rather than bad data)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _require_key(args) -> bytes:
    text = getattr(args, "key", None) or os.environ.get(KEY_ENV)
    if not text:
        raise _UsageError(f"no key: pass --key or set ${KEY_ENV}")
    return parse_key_hex(text)


def _parse_s_range(text: str):
    parts = text.split("..")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError(text)
    except ValueError:
        raise _UsageError(f"bad --s-range {text!r}, expected N or A..B") from None
    if not (0 <= lo <= hi <= 8):
        raise _UsageError(f"--s-range {text!r} outside 0..8")
    return list(range(lo, hi + 1))


def _progress(stage):
    def hook(done, total):
        if done % 25 == 0 or done == total:
            log.info("%s %d/%d", stage, done, total)
    return hook


def _read_labels_csv(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["path", "label"]:
        raise DataFormatError(f"{path}:1: expected header 'path,label'")
    out = []
    for ln, parts in enumerate(rows[1:], start=2):
        if not parts:
            continue
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{ln}: expected 2 columns")
        out.append((parts[0].strip(), parts[1].strip()))
    if not out:
        raise DataFormatError(f"{path}: no label rows")
    return out


def _labels_sidecar(features_path) -> str:
    return str(features_path) + ".labels.csv"


# ---------------------------------------------------------------------------
# commands


def cmd_encrypt(args):
    key = _require_key(args)
    nonce = parse_nonce_hex(args.nonce) if args.nonce else derive_nonce(0)
    if not args.nonce:
        log.warning("no --nonce given, using index-0 nonce; do not reuse this key on other images")
    img = read_image(args.infile)
    write_pgm(args.outfile, encrypt_planes(img, EncryptionParams(key, nonce, args.s)))
    log.info("encrypted s=%d -> %s", args.s, args.outfile)


def cmd_zero(args):
    write_pgm(args.outfile, zero_planes(read_image(args.infile), args.s))


def cmd_shift(args):
    write_pgm(args.outfile, shift_planes(read_image(args.infile), args.s))


def cmd_extract(args):
    manifest = ingest_manifest(args.manifest)
    workers = args.workers or os.cpu_count() or 1
    features = extract_manifest_features(
        manifest, args.s, args.preprocess, key=None, workers=workers,
        progress=_progress("extract"),
    )
    write_feature_file(args.out_features, features)
    labels = [(e.path, e.label) for e in manifest.entries]
    atomic_write_text(
        _labels_sidecar(args.out_features),
        "path,label\n" + "\n".join(f"{p},{l}" for p, l in labels) + "\n",
    )
    if args.csv:
        write_feature_csv(args.csv, features, [e.label for e in manifest.entries])
    print(f"features {features.shape[0]}x{features.shape[1]} -> {args.out_features}")


def _load_labeled(features_path, labels_path):
    X = read_feature_file(features_path).astype(np.float64)
    labels_path = labels_path or _labels_sidecar(features_path)
    pairs = _read_labels_csv(labels_path)
    if len(pairs) != X.shape[0]:
        raise DataFormatError(
            f"{labels_path}: {len(pairs)} labels for {X.shape[0]} feature rows"
        )
    return LabeledFeatureSet(X, labels_to_values([l for _, l in pairs]))


def cmd_train(args):
    data = _load_labeled(args.features, args.labels)
    lam = args.lam
    if args.cv:
        lam, table = cv_lambda(data, seed=args.seed)
        for grid_lam, acc in table:
            log.info("cv lambda=%g accuracy=%.4f", grid_lam, acc)
    model = train(data, lam=lam)
    save_model(args.out_model, model)
    train_acc = evaluate(model, data)
    print(f"model -> {args.out_model} lambda={lam!r} train_accuracy={train_acc!r}")


def cmd_evaluate(args):
    model = load_model(args.model)
    data = _load_labeled(args.features, args.labels)
    print(f"accuracy {evaluate(model, data)!r}")


def cmd_experiment(args):
    key = _require_key(args)
    manifest = ingest_manifest(args.manifest)
    s_values = _parse_s_range(args.s_range)
    modes = ["none", "zero"] if args.preprocess == "both" else [args.preprocess]
    report = Path(args.report)
    existing = []
    if report.exists():
        if args.force:
            pass
        elif args.append:
            existing = read_report_csv(report)
        else:
            raise DataFormatError(
                f"{report} already exists; pass --append to add rows or --force to overwrite"
            )
    workers = args.workers or os.cpu_count() or 1
    config = ExperimentConfig(
        key=key, seed=args.seed, ratio=args.ratio, lam=args.lam, workers=workers,
    )
    rows = list(existing)
    for s in s_values:
        for mode in modes:
            row = run_forensics_experiment(
                manifest, s, mode, config, progress=_progress(f"extract s={s} {mode}")
            )
            rows.append(_row_to_strings(row))
            write_report_csv(report, rows)
            print(f"s={s} task={row.task} accuracy={row.accuracy!r} "
                  f"n_train={row.n_train} n_test={row.n_test}")
    if not args.no_plot:
        fig_path = report.with_suffix(".png")
        render_report_figure(rows, fig_path)
        log.info("figure -> %s", fig_path)


def cmd_synth(args):
    out_dir = Path(args.out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise DataFormatError(f"{out_dir} exists and is not empty; pass --force to reuse")
    manifest = synthesize_dataset(out_dir, seed=args.seed, n_per_class=args.n, size=args.size)
    print(manifest)


def cmd_tradeoff(args):
    rows = tradeoff_report(args.forensics, args.recognizability, args.out)
    if not args.no_plot:
        fig_path = Path(args.out).with_suffix(".png")
        render_tradeoff_figure(rows, fig_path)
        log.info("figure -> %s", fig_path)
    print(f"trade-off rows={len(rows)} -> {args.out}")


def cmd_dump_residual(args):
    img = read_image(args.infile)
    if args.kernel:
        rmap = kernel_residual(img, args.kernel)
    else:
        if args.order is None or args.direction is None:
            raise _UsageError("pass --kernel KIND, or both --order and --direction")
        rmap = directional_residual(img, args.order, args.direction)
    atomic_write_text(args.outfile, format_residual(rmap))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="planeguard",
        description="Selective bitplane encryption with residual-feature tampering detection.",
    )
    parser.add_argument(
        "--version", action="version",
        version=f"planeguard {__version__} (feature roster {roster_hash()})",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for debug")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    # accepted after the subcommand too; SUPPRESS keeps the subparser from
    # clobbering a -v given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count",
                        default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    def add(name, func, help):
        p = sub.add_parser(name, help=help, parents=[common])
        p.set_defaults(func=func)
        return p

    p = add("encrypt", cmd_encrypt, "XOR the top s bitplanes with the keystream")
    p.add_argument("--key", help=f"64 hex digits (default: ${KEY_ENV})")
    p.add_argument("--s", type=int, required=True, help="number of encrypted planes, 0..8")
    p.add_argument("--nonce", help="24 hex digits (default: derived from index 0)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)

    for name, func, help_text in (
        ("zero", cmd_zero, "clear the top s bitplanes"),
        ("shift", cmd_shift, "left-shift the clear planes into the top positions"),
    ):
        p = add(name, func, help_text)
        p.add_argument("--s", type=int, required=True)
        p.add_argument("--in", dest="infile", required=True)
        p.add_argument("--out", dest="outfile", required=True)

    p = add("extract", cmd_extract, "extract feature vectors for a manifest")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--preprocess", choices=("none", "zero"), default="zero")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-features", required=True)
    p.add_argument("--csv", help="also export label,values CSV")
    p.add_argument("--workers", type=int)

    p = add("train", cmd_train, "fit the ridge detector on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", help="label CSV (default: <features>.labels.csv)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--cv", action="store_true", help="pick lambda by 5-fold accuracy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", required=True)

    p = add("evaluate", cmd_evaluate, "accuracy of a saved model on a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels")

    p = add("experiment", cmd_experiment, "encrypt, extract, train, and report per s")
    p.add_argument("--key", help=f"64 hex digits (default: ${KEY_ENV})")
    p.add_argument("--manifest", required=True)
    p.add_argument("--s-range", default="0..8", help="N or A..B (default 0..8)")
    p.add_argument("--preprocess", choices=("none", "zero", "both"), default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--report", required=True)
    p.add_argument("--append", action="store_true", help="add rows to an existing report")
    p.add_argument("--force", action="store_true", help="overwrite an existing report")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-plot", action="store_true")

    p = add("synth", cmd_synth, "generate a synthetic labeled dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=200, help="images per class")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")

    p = add("tradeoff", cmd_tradeoff, "join forensics and recognizability reports")
    p.add_argument("--forensics", required=True)
    p.add_argument("--recognizability")
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")

    p = add("dump-residual", cmd_dump_residual, "write one residual map as a text grid")
    p.add_argument("--kernel", choices=KERNEL_KINDS)
    p.add_argument("--order", type=int, choices=(1, 2, 3))
    p.add_argument("--direction", choices=tuple(dict.fromkeys(DIRECTIONS + AXES)))
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="planeguard: %(message)s")
    try:
        args.func(args)
    except _UsageError as exc:
        print(f"planeguard: error: {exc}", file=sys.stderr)
        return 1
    except PlaneguardError as exc:
        print(f"planeguard: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"planeguard: internal error: {exc!r}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
