"""Command-line interface: detect, inject, eval, profile-k, bound.

One executable covers the full benchmark loop: inject synthetic noise into
clean labels, detect corrupted instances, evaluate the detection against the
clean labels, profile neighborhood purity, and evaluate the theoretical
bounds. Every subcommand is deterministic given its flags; all randomness
derives from --seed.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import k_breakeven, rank_f1_bound, vote_lower_bound
from .data import (
    LabeledDataset,
    dumps_stable,
    infer_n_classes,
    load_features,
    load_labels,
    read_report,
    write_labels,
    write_report,
)
from .detect import DetectorConfig, run_pipeline
from .errors import ConfigError, DataError
from .hoc import NoiseModel
from .metrics import detection_metrics, neighbor_mismatch_profile
from .noise import NoiseSpec, inject


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _emit(payload: dict, out: str | None) -> None:
    text = dumps_stable(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_noise_model(path: str) -> NoiseModel:
    p = Path(path)
    if not p.exists():
        raise DataError(f"noise model file not found: {p}")
    try:
        return NoiseModel.from_dict(json.loads(p.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{p} is not a valid noise model: {exc}") from exc


def cmd_detect(args) -> int:
    features = load_features(args.features, normalize=not args.no_normalize)
    noisy = load_labels(args.labels, column=args.label_column)
    clean = load_labels(args.clean, column=args.label_column) if args.clean else None
    n_classes = infer_n_classes(
        noisy if clean is None else np.concatenate([noisy, clean]), args.n_classes
    )
    dataset = LabeledDataset(
        features=features, noisy_labels=noisy, n_classes=n_classes, clean_labels=clean
    )
    config = DetectorConfig(
        method=args.method,
        k=args.k,
        epochs=args.epochs,
        seed=args.seed,
        weighting=args.weighting,
        jitter_sigma=args.jitter_sigma,
        noise_source="given" if args.noise_source == "file" else "hoc",
        noise_model=_load_noise_model(args.noise_model) if args.noise_model else None,
        threads=args.threads,
        backend=args.backend,
    )
    if args.noise_source == "file" and args.noise_model is None:
        raise ConfigError("--noise-source file requires --noise-model")

    report = run_pipeline(dataset, config)
    if clean is not None:
        report.evaluation = detection_metrics(report.flags, noisy, clean).to_dict()
    write_report(report, args.out)

    summary = (
        f"N={dataset.n_points} K={n_classes} flagged={int(report.flags.sum())}"
    )
    if report.thresholds is not None:
        summary += " per-class-head=" + ",".join(str(int(t)) for t in report.thresholds)
    print(summary)
    return 0


def cmd_inject(args) -> int:
    clean = load_labels(args.labels, column=args.label_column)
    n_classes = infer_n_classes(clean, args.n_classes)
    spec = NoiseSpec(kind=args.kind, eta=args.eta, seed=args.seed, rate_std=args.rate_std)
    features = None
    if args.kind == "instance":
        if not args.features:
            raise ConfigError("--kind instance requires --features")
        features = load_features(args.features, normalize=not args.no_normalize)
    noisy = inject(spec, clean, n_classes, features=features)
    write_labels(noisy, args.out)

    realized = float(np.mean(noisy != clean))
    manifest = {
        "kind": spec.kind,
        "eta": spec.eta,
        "seed": spec.seed,
        "n": int(clean.size),
        "n_classes": n_classes,
        "realized_fraction": realized,
    }
    if spec.kind == "instance":
        manifest["rate_std"] = spec.rate_std
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    Path(manifest_path).write_text(dumps_stable(manifest), encoding="utf-8")
    print(f"N={clean.size} K={n_classes} realized_fraction={realized:.4f}")
    return 0


def cmd_eval(args) -> int:
    report = read_report(args.report)
    clean = load_labels(args.clean, column=args.label_column)
    if clean.shape != report.noisy_labels.shape:
        raise DataError(
            f"{clean.size} clean labels for {report.noisy_labels.size} report instances"
        )
    metrics = detection_metrics(report.flags, report.noisy_labels, clean)
    _emit(metrics.to_dict(), args.out)
    return 0


def cmd_profile_k(args) -> int:
    features = load_features(args.features, normalize=not args.no_normalize)
    clean = load_labels(args.clean, column=args.label_column)
    if clean.shape[0] != features.shape[0]:
        raise DataError(f"{clean.size} labels for {features.shape[0]} feature rows")
    if args.k_max >= features.shape[0]:
        raise ConfigError(f"--k-max {args.k_max} needs more than k_max points")
    profile = neighbor_mismatch_profile(features, clean, range(1, args.k_max + 1))
    lines = ["k\tmismatch_rate"] + [f"{k}\t{rate:.6f}" for k, rate in profile]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_bound(args) -> int:
    modes = [name for name in ("prop41", "breakeven", "rank_f1") if getattr(args, name)]
    if len(modes) != 1:
        raise ConfigError("choose exactly one of --prop41, --breakeven, --rank-f1")
    mode = modes[0]
    if mode == "prop41":
        if args.k is None or args.e is None or args.delta is None:
            raise ConfigError("--prop41 requires --k, --e, --delta")
        payload = {
            "bound": vote_lower_bound(args.k, args.e, args.delta),
            "k": args.k,
            "e": args.e,
            "delta": args.delta,
        }
    elif mode == "breakeven":
        if None in (args.k1, args.k2, args.e, args.delta):
            raise ConfigError("--breakeven requires --k1, --k2, --e, --delta")
        payload = {
            "breakeven_delta": k_breakeven(args.k1, args.k2, args.e, args.delta),
            "k1": args.k1,
            "k2": args.k2,
            "e": args.e,
            "delta_k1": args.delta,
        }
    else:
        required = (args.n_corrupted, args.n_clean, args.alpha, args.mu_gap, args.band_width, args.tail_decay)
        if None in required:
            raise ConfigError(
                "--rank-f1 requires --n-corrupted, --n-clean, --alpha, --mu-gap, "
                "--band-width, --tail-decay"
            )
        result = rank_f1_bound(
            args.n_corrupted,
            args.n_clean,
            args.alpha,
            args.mu_gap,
            args.band_width,
            args.tail_decay,
            mc_samples=args.mc_samples,
            seed=args.seed,
        )
        payload = result.to_dict()
    _emit(payload, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="labelaudit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common_io(p):
        p.add_argument("--label-column", help="read labels from this CSV column instead of one-per-line")
        p.add_argument("--no-normalize", action="store_true", help="skip L2 row normalization of features")

    p = sub.add_parser("detect", help="flag likely-corrupted labels")
    p.add_argument("--features", required=True, help="feature matrix (.csv or .f32 + .json sidecar)")
    p.add_argument("--labels", required=True, help="noisy labels, one per line")
    p.add_argument("--out", required=True, help="detection report JSON path")
    p.add_argument("--method", choices=["vote", "rank"], default="vote")
    p.add_argument("--k", type=int, default=10, help="number of neighbors (default 10)")
    p.add_argument("--epochs", type=int, default=21, help="detection epochs, odd (default 21)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jitter-sigma", type=float, default=0.0, help="per-epoch Gaussian feature jitter")
    p.add_argument("--weighting", choices=["uniform", "similarity"], default="uniform")
    p.add_argument("--noise-source", choices=["hoc", "file"], default="hoc",
                   help="estimate the noise model (hoc) or load it (file)")
    p.add_argument("--noise-model", help="noise model JSON (with --noise-source file)")
    p.add_argument("--clean", help="optional clean labels; embeds evaluation metrics in the report")
    p.add_argument("--n-classes", type=int, help="override inferred class count")
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--backend", choices=["auto", "compiled", "numpy"], default="auto")
    add_common_io(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("inject", help="corrupt clean labels synthetically")
    p.add_argument("--labels", required=True, help="clean labels, one per line")
    p.add_argument("--kind", choices=["symmetric", "asymmetric", "instance"], required=True)
    p.add_argument("--eta", type=float, required=True, help="overall corruption ratio in [0, 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="noisy labels output path")
    p.add_argument("--manifest", help="manifest JSON path (default: <out>.manifest.json)")
    p.add_argument("--features", help="feature matrix, required for --kind instance")
    p.add_argument("--n-classes", type=int, help="override inferred class count")
    p.add_argument("--rate-std", type=float, default=0.1,
                   help="per-instance rate spread for --kind instance (advanced)")
    add_common_io(p)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("eval", help="score a detection report against clean labels")
    p.add_argument("--report", required=True, help="detection report JSON")
    p.add_argument("--clean", required=True, help="clean labels, one per line")
    p.add_argument("--out", help="metrics JSON path (default: stdout)")
    p.add_argument("--label-column", help="read labels from this CSV column instead of one-per-line")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("profile-k", help="neighborhood label-purity profile over k")
    p.add_argument("--features", required=True)
    p.add_argument("--clean", required=True, help="clean labels, one per line")
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--out", help="TSV output path (default: stdout)")
    add_common_io(p)
    p.set_defaults(func=cmd_profile_k)

    p = sub.add_parser("bound", help="evaluate the theoretical detection bounds")
    p.add_argument("--prop41", action="store_true", help="majority-vote correctness lower bound")
    p.add_argument("--breakeven", action="store_true", help="neighborhood-size break-even mismatch rate")
    p.add_argument("--rank-f1", action="store_true", help="rank-detection worst-case F1 bound")
    p.add_argument("--k", type=int, help="neighborhood size (--prop41)")
    p.add_argument("--k1", type=int, help="smaller neighborhood size (--breakeven)")
    p.add_argument("--k2", type=int, help="larger neighborhood size (--breakeven)")
    p.add_argument("--e", type=float, help="noise-rate upper bound, in [0, 0.5)")
    p.add_argument("--delta", type=float, help="neighborhood mismatch rate")
    p.add_argument("--n-corrupted", type=int, help="corrupted count in the class (--rank-f1)")
    p.add_argument("--n-clean", type=int, help="clean count in the class (--rank-f1)")
    p.add_argument("--alpha", type=int, help="tolerated in-band misorderings (--rank-f1)")
    p.add_argument("--mu-gap", type=float, help="clean-minus-corrupted mean score gap (--rank-f1)")
    p.add_argument("--band-width", type=float, help="score density band width (--rank-f1)")
    p.add_argument("--tail-decay", type=float, help="score tail decay rate (--rank-f1)")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON output path (default: stdout)")
    p.set_defaults(func=cmd_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"labelaudit: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"labelaudit: data error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        print("labelaudit: internal error:", file=sys.stderr)
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
