"""Command-line front end.

Exit codes follow the same taxonomy as the forensics CLI: 0 success,
1 usage error, 2 data error, 3 internal error.
"""

import argparse
import sys

from . import __version__
from .data import (export_cifar10_subset, read_class_manifest, split_class_manifest,
                   synthesize_class_dataset)
from .errors import InvalidArgumentError, RecognizabilityError
from .model import ARCHITECTURES
from .report import TASK, append_report_row
from .training import (TrainConfig, evaluate_recognizability, finetune,
                       load_checkpoint, save_checkpoint)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_s_values(text):
    """Accept a single level, an inclusive range A..B, or a comma list."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        elif "," in text:
            values = [int(part) for part in text.split(",")]
        else:
            values = [int(text)]
    except ValueError:
        raise InvalidArgumentError(f"cannot parse s specification {text!r}") from None
    if not values:
        raise InvalidArgumentError(f"empty s specification {text!r}")
    for s in values:
        if not 0 <= s <= 8:
            raise InvalidArgumentError(f"s {s} outside 0..8")
    return values


def _train_config(args, s):
    return TrainConfig(s=s, batch_size=args.batch_size,
                       learning_rate=args.lr, max_epochs=args.epochs,
                       patience=args.patience, val_ratio=args.val_ratio,
                       seed=args.seed)


def _add_train_flags(p):
    p.add_argument("--arch", choices=ARCHITECTURES, default="vgg11")
    p.add_argument("--weights", default=None,
                   help="state-dict file to start the network from"
                        " (stock 1000-class dict for vgg11)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--val-ratio", type=float, default=0.2)


def cmd_synth_classes(args):
    manifest = synthesize_class_dataset(args.out_dir, n_per_class=args.n_per_class,
                                        size=args.size, seed=args.seed)
    print(manifest)
    return 0


def cmd_prepare_cifar10(args):
    train_manifest, test_manifest = export_cifar10_subset(
        args.cifar_dir, args.out_dir, n_per_class=args.n_per_class,
        test_per_class=args.test_per_class, seed=args.seed)
    print(train_manifest)
    print(test_manifest)
    return 0


def cmd_train(args):
    entries = read_class_manifest(args.manifest)
    config = _train_config(args, args.s)
    model, classes, log = finetune(entries, config, arch=args.arch,
                                   weights_path=args.weights)
    save_checkpoint(args.out, model, args.arch, classes, args.s)
    print(f"model -> {args.out} s={args.s} best_epoch={log.best_epoch}"
          f" val_accuracy={log.best_val_accuracy}")
    return 0


def cmd_evaluate(args):
    model, classes, s = load_checkpoint(args.model)
    if args.s is not None:
        s = args.s
    entries = read_class_manifest(args.manifest)
    accuracy = evaluate_recognizability(model, classes, entries, s,
                                        batch_size=args.batch_size)
    print(f"accuracy {accuracy!r}")
    if args.report is not None:
        append_report_row(args.report, s, accuracy, args.n_train,
                          len(entries), args.seed)
    return 0


def cmd_experiment(args):
    s_values = _parse_s_values(args.s)
    entries = read_class_manifest(args.manifest)
    train_entries, test_entries = split_class_manifest(entries, args.ratio,
                                                       args.seed)
    for s in s_values:
        config = _train_config(args, s)
        model, classes, _ = finetune(train_entries, config, arch=args.arch,
                                     weights_path=args.weights)
        accuracy = evaluate_recognizability(model, classes, test_entries, s,
                                            batch_size=args.batch_size)
        append_report_row(args.report, s, accuracy, len(train_entries),
                          len(test_entries), args.seed)
        print(f"s={s} task={TASK} accuracy={accuracy!r}"
              f" n_train={len(train_entries)} n_test={len(test_entries)}")
    return 0


def build_parser():
    parser = _Parser(prog="recognizability",
                     description="class-prediction accuracy on selectively"
                                 " encrypted, shift-standardized images")
    parser.add_argument("--version", action="version",
                        version=f"recognizability {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("synth-classes",
                       help="write a small two-class stripe corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-per-class", type=int, default=30)
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_classes)

    p = sub.add_parser("prepare-cifar10",
                       help="export a CIFAR-10 subset as PGM + manifests")
    p.add_argument("--cifar-dir", required=True,
                   help="directory holding the python pickle batches")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-per-class", type=int, default=500)
    p.add_argument("--test-per-class", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prepare_cifar10)

    p = sub.add_parser("train", help="fine-tune one model at a fixed s")
    p.add_argument("--manifest", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="accuracy of a checkpoint on a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--s", type=int, default=None,
                   help="override the protection level stored in the checkpoint")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--report", default=None,
                   help="append a row to this shared report CSV")
    p.add_argument("--n-train", type=int, default=0,
                   help="training count recorded in the report row")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment",
                       help="split, train and evaluate across s values")
    p.add_argument("--manifest", required=True)
    p.add_argument("--s", required=True,
                   help="a level, a range A..B, or a comma list")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--report", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InvalidArgumentError as exc:
        print(f"recognizability: error: {exc}", file=sys.stderr)
        return 1
    except RecognizabilityError as exc:
        print(f"recognizability: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 3
        print(f"recognizability: internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
