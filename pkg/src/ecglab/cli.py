"""Command-line pipeline: synth -> noise -> train -> eval/sweep.

Every subcommand with a --seed flag writes byte-identical outputs across
runs. Exit code is 0 iff all requested outputs were written; any failure
prints a single-line diagnostic to stderr and returns 1 (argparse usage
errors exit with 2).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import models, training
from .autodiff import Tensor
from .checkpoint import load_params, save_params
from .config import load_config
from .dsp import bandpass_filter, wavelet_filter
from .metrics import evaluate_denoiser, reports_to_csv
from .signals import (
    LabeledDataset,
    Signal,
    read_dataset,
    read_pairs,
    write_dataset,
    write_pairs,
)
from .synth import McSharryParams, make_training_pairs, mcsharry_batch
from .training import denoiser_fn, sweep_to_csv


def _meta(net: models.Network, extra: dict[str, float]) -> dict[str, np.ndarray]:
    state = net.state_dict()
    for key, value in extra.items():
        state[f"meta.{key}"] = np.array([float(value)])
    return state


def _meta_value(state: dict[str, np.ndarray], key: str, default: float | None = None) -> float:
    arr = state.get(f"meta.{key}")
    if arr is None:
        if default is None:
            raise ValueError(f"checkpoint is missing metadata {key!r}")
        return default
    return float(np.asarray(arr).reshape(-1)[0])


def _load_generator(path: str) -> tuple[models.Network, int]:
    state = load_params(path)
    d = int(_meta_value(state, "d"))
    z_len = int(_meta_value(state, "z_len"))
    length = int(_meta_value(state, "signal_length"))
    net = models.build("generator", d=d, z_len=z_len, signal_length=length)
    net.load_state_dict(state)
    return net, z_len


def _load_denoiser(path: str, signal_length: int) -> models.Network:
    state = load_params(path)
    d = int(_meta_value(state, "d"))
    net = models.build("denoiser", d=d, signal_length=signal_length)
    net.load_state_dict(state)
    return net


# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = load_config(args.config)
    rng = np.random.default_rng(args.seed)
    if args.model == "mcsharry":
        if args.hr is not None:
            rates = np.full(args.count, args.hr)
        else:
            rates = rng.uniform(args.hr_min, args.hr_max, size=args.count)
        params = [
            McSharryParams(
                heart_rate_bpm=float(hr),
                sample_rate_hz=args.sample_rate,
                duration_s=args.duration,
            )
            for hr in rates
        ]
        sigs = mcsharry_batch(params)
    else:
        generator, z_len = _load_generator(args.checkpoint)
        sigs = []
        remaining = args.count
        with ad.no_grad():
            while remaining > 0:
                n = min(remaining, 128)
                z = models.sample_latent(rng, n, z_len, cfg.latent)
                out = generator.forward(z, mode="infer").data[:, :, 0]
                sigs.extend(Signal(row, args.sample_rate) for row in out)
                remaining -= n
    labels = np.zeros((len(sigs), 5), dtype=np.uint8)
    write_dataset(LabeledDataset(tuple(sigs), labels), args.out)
    print(f"wrote {len(sigs)} signals to {args.out}")
    return 0


def cmd_noise(args) -> int:
    if args.gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {args.gamma}")
    cfg = load_config(args.config)
    ds = read_dataset(args.input)
    pairs = make_training_pairs(list(ds.signals), args.gamma, args.seed, cfg.noise_ranges())
    write_pairs(pairs, args.out)
    print(f"wrote {len(pairs)} clean/noisy pairs to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.network == "gan":
        ds = read_dataset(args.data)
        gen, critic, log = training.train_gan(list(ds.signals), cfg.gan(), args.seed)
        length = ds.signals[0].length
        save_params(out / "generator.ecgw", _meta(gen, {"d": cfg.model_dim, "z_len": cfg.z_len, "signal_length": length}))
        save_params(out / "critic.ecgw", _meta(critic, {"d": cfg.model_dim, "signal_length": length}))
        (out / "gan_log.csv").write_text(log.to_csv())
        print(f"wrote generator.ecgw, critic.ecgw, gan_log.csv to {out}")
    elif args.network == "inception":
        ds = read_dataset(args.data)
        net, log = training.train_inception(ds, cfg.classifier(), args.seed)
        save_params(out / "inception.ecgw", _meta(net, {}))
        (out / "inception_log.csv").write_text(log.to_csv())
        print(f"wrote inception.ecgw, inception_log.csv to {out}")
    else:
        pairs = read_pairs(args.data)
        critic_state = None
        if args.variant == "pretrained":
            if not args.critic_checkpoint:
                raise ValueError("the pretrained variant needs --critic-checkpoint")
            critic_state = load_params(args.critic_checkpoint)
        net, log = training.train_denoiser(pairs, cfg.denoiser(), args.variant, args.seed,
                                           critic_state=critic_state)
        length = pairs[0].clean.length if pairs else 0
        save_params(out / "denoiser.ecgw", _meta(net, {"d": cfg.model_dim, "signal_length": length}))
        (out / "denoiser_log.csv").write_text(log.to_csv())
        print(f"wrote denoiser.ecgw, denoiser_log.csv to {out}")
    return 0


EVAL_METHOD_ORDER = ("none", "bandpass", "wavelet", "denoiser")


def cmd_eval(args) -> int:
    pairs = read_pairs(args.pairs)
    if not pairs:
        raise ValueError("no pairs to evaluate")
    methods = list(EVAL_METHOD_ORDER) if args.all else [args.method]
    if "denoiser" in methods and not args.checkpoint:
        if args.all:
            methods.remove("denoiser")
        else:
            raise ValueError("method denoiser needs --checkpoint")
    reports = []
    for method in methods:
        if method == "none":
            fn = None
        elif method == "bandpass":
            fn = bandpass_filter
        elif method == "wavelet":
            fn = wavelet_filter
        else:
            net = _load_denoiser(args.checkpoint, pairs[0].clean.length)
            fn = denoiser_fn(net)
        reports.append(evaluate_denoiser(fn, pairs, method))
    csv = reports_to_csv(reports)
    if args.out:
        Path(args.out).write_text(csv)
        print(f"wrote {len(reports)} report rows to {args.out}")
    else:
        sys.stdout.write(csv)
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    real = read_pairs(args.real)
    synthetic = read_pairs(args.synthetic)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    comps = tuple(args.compositions.split(","))
    rows = training.ablation_sweep(real, synthetic, sizes, cfg.denoiser(), args.seed,
                                   compositions=comps)
    csv = sweep_to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv)
        print(f"wrote {len(rows)} sweep rows to {args.out}")
    else:
        sys.stdout.write(csv)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecglab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a clean signal dataset")
    p.add_argument("--model", choices=("mcsharry", "gan"), required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", help="generator checkpoint (gan model)")
    p.add_argument("--hr", type=float, help="fixed heart rate in bpm")
    p.add_argument("--hr-min", type=float, default=55.0)
    p.add_argument("--hr-max", type=float, default=95.0)
    p.add_argument("--sample-rate", type=float, default=500.0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("noise", help="corrupt a dataset into clean/noisy pairs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_noise)

    p = sub.add_parser("train", help="train one of the three networks")
    p.add_argument("network", choices=("gan", "inception", "denoiser"))
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=training.DENOISER_VARIANTS, default="baseline")
    p.add_argument("--critic-checkpoint")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score a denoising method on pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--method", choices=EVAL_METHOD_ORDER, default="none")
    p.add_argument("--checkpoint")
    p.add_argument("--all", action="store_true", help="all methods, one row each")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="training-set-size ablation grid")
    p.add_argument("--real", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated sizes")
    p.add_argument("--compositions", default=",".join(training.COMPOSITIONS))
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and args.model == "gan" and not args.checkpoint:
        parser.error("--model gan requires --checkpoint")
    try:
        return args.fn(args)
    except Exception as exc:  # single-line diagnostic, nonzero exit
        print(f"ecglab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
