"""Command line interface: ``semiscale {filter,kernel,verify,train,eval,plot}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import io as sio
from .kernels import KernelSpec, sample_kernel
from .network import NetworkConfig
from .semiconv import convolve
from .semifield import Root, parse_semifield

log = logging.getLogger("semiscale")


def _metric(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("metric needs four comma-separated numbers h11,h12,h21,h22")
    return np.array(vals).reshape(2, 2)


def _semifield(text):
    try:
        return parse_semifield(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _spec(args):
    return KernelSpec(args.semifield, args.alpha, args.time, args.metric)


def cmd_filter(args):
    img = sio.load_image(args.input, gray=True)
    spec = _spec(args)
    kernel = sample_kernel(spec, radius=args.radius, discrete=args.discrete)
    if isinstance(spec.semifield, Root):
        img = np.maximum(img, 1e-8)
    out = convolve(spec.semifield, kernel, img, boundary=args.boundary)
    sio.save_image(out, args.output)
    log.info("filtered %s -> %s with %s, radius %d", args.input, args.output, spec.semifield, kernel.radius)
    return 0


def cmd_kernel(args):
    kernel = sample_kernel(_spec(args), radius=args.radius, normalize=not args.raw, discrete=args.discrete)
    if args.csv:
        sio.write_kernel_csv(kernel, args.csv)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("dx", "dy", "value"))
        r = kernel.radius
        for (a, b), v in np.ndenumerate(kernel.values):
            w.writerow((a - r, b - r, repr(float(v))))
    return 0


def cmd_verify(args):
    from . import verify

    rows = verify.run(args.suite)
    for suite, check, ok, detail, secs in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {suite:<10} {check:<40} {detail} ({secs:.2f}s)")
    if args.report:
        sio.write_csv(args.report, ("suite", "check", "passed", "detail", "seconds"),
                      [(s, c, int(ok), d, f"{t:.4f}") for s, c, ok, d, t in rows])
    failed = sum(not r[2] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return 0 if failed == 0 else 1


def load_data(spec: str, fraction: float = 1.0, seed: int = 0, train_count: int = 2000, test_count: int = 200):
    """``synthetic:SEED`` or ``drive:PATH`` -> ((train images, masks), (test images, masks))."""
    kind, _, arg = spec.partition(":")
    if kind == "synthetic":
        from .data import generate_synthetic_vessels

        x, m = generate_synthetic_vessels(int(arg or 0), train_count + test_count)
        train, test = (x[:train_count], m[:train_count]), (x[train_count:], m[train_count:])
    elif kind == "drive":
        imgs, fov, ann = sio.load_drive(arg, "training")
        p = sio.extract_patches(imgs, fov, ann)
        train = (np.moveaxis(p["images"], -1, 1), p["annotations"])
        timgs, tfov, tann = sio.load_drive(arg, "test")
        q = sio.extract_patches(timgs, tfov, tann)
        test = (np.moveaxis(q["images"], -1, 1), q["annotations"])
    else:
        raise ValueError(f"data must be synthetic:SEED or drive:PATH, got {spec!r}")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    if fraction < 1:
        n = len(train[0])
        keep = np.sort(np.random.default_rng(seed).choice(n, size=max(1, int(round(fraction * n))), replace=False))
        train = (train[0][keep], train[1][keep])
    return train, test


def _channels(x):
    return 1 if np.ndim(x) == 3 else x.shape[1]


def cmd_train(args):
    from .trainer import save_checkpoint, train

    config = NetworkConfig.from_json(args.config) if args.config else NetworkConfig()
    if args.seed is not None:
        config.seed = args.seed
    train_set, test_set = load_data(args.data, args.fraction, config.seed, args.train_count, args.test_count)
    c_in = _channels(train_set[0])
    if config.in_channels != c_in:
        log.warning("config expects %d input channels, data has %d; using %d", config.in_channels, c_in, c_in)
        config.in_channels = c_in
    state = train(config, train_set, test_set, max_batches=args.max_batches, time_limit=args.time_limit,
                  log_path=args.log, target_dice=args.target_dice)
    save_checkpoint(args.out, state)
    print(f"best test dice {state.best_dice:.4f} at batch {state.best_batch} "
          f"({state.batch} batches, stopped: {state.stopped}, {state.network.n_params} parameters)")
    return 0


def cmd_eval(args):
    from .trainer import evaluate, load_checkpoint

    state = load_checkpoint(args.ckpt)
    _, test_set = load_data(args.data, 1.0, 0, args.train_count, args.test_count)
    dice = evaluate(state.network, *test_set)
    print(f"test dice {dice:.4f}")
    return 0


def cmd_plot(args):
    with open(args.log, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{args.log} has no rows")
    dice = np.array([float(r["test_dice"]) for r in rows])
    best = np.maximum.accumulate(dice)
    out = []
    for r, b in zip(rows, best):
        out.append((r["batch"], r["lr"], r["train_loss"], r["test_dice"], f"{b:.6f}", f"{best[-1] - b:.6f}"))
    sio.write_csv(args.out, ("batch", "lr", "train_loss", "test_dice", "best_dice", "best_gap"), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semiscale", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def kernel_args(p):
        p.add_argument("--semifield", type=_semifield, required=True, help="linear | root:P | log:MU | tmax | tmin")
        p.add_argument("--alpha", type=float, default=2.0)
        p.add_argument("--time", type=float, default=1.0)
        p.add_argument("--metric", type=_metric, default=np.eye(2), help="h11,h12,h21,h22")
        p.add_argument("--radius", type=int, default=None)
        p.add_argument("--discrete", action="store_true",
                       help="lattice heat kernel instead of the sampled Gaussian (linear, root, log)")

    p = sub.add_parser("filter", help="apply one scale-space step to an image")
    kernel_args(p)
    p.add_argument("--boundary", choices=("replicate", "reflect", "zero"), default="replicate")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("kernel", help="dump a sampled kernel as CSV")
    kernel_args(p)
    p.add_argument("--csv", default=None)
    p.add_argument("--raw", action="store_true", help="skip normalisation of linear/root kernels")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", default="all", choices=("core", "kernels", "transforms", "conv", "layers", "all"))
    p.add_argument("--report", default=None, help="CSV report path")
    p.set_defaults(func=cmd_verify)

    def data_args(p):
        p.add_argument("--data", required=True, help="synthetic:SEED or drive:PATH")
        p.add_argument("--train-count", type=int, default=2000)
        p.add_argument("--test-count", type=int, default=200)

    p = sub.add_parser("train", help="train a PDE-CNN")
    p.add_argument("--config", default=None, help="NetworkConfig JSON")
    data_args(p)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-batches", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--target-dice", type=float, default=None, help="stop once test Dice reaches this value")
    p.add_argument("--log", default=None, help="training log CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--ckpt", required=True)
    data_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="reshape a training log for plotting")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError) as exc:
        print(f"semiscale {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
