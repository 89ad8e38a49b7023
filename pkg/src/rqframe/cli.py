"""Command-line interface: ``rqframe <command> [options]``.

Every command writes its outputs and a ``manifest.json`` (config, seed,
version) into ``--out``. Flags override values from ``--config``.

Environment: ``RQ_THREADS`` caps BLAS/OpenMP threads and
``RQ_DETERMINISTIC=1`` forces single-threaded numerics. Both must be set
before numpy is imported, which this module does on import.
"""

from __future__ import annotations

import os


def _limit_threads() -> None:
    threads = os.environ.get("RQ_THREADS")
    if os.environ.get("RQ_DETERMINISTIC") == "1":
        threads = "1"
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


_limit_threads()

import argparse  # noqa: E402
import csv  # noqa: E402
import logging  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .config import RunConfig, load_config  # noqa: E402
from .diffusion import SpectralFilter, diffuse, scheme2_denoise, scheme2_series, spectral_filter  # noqa: E402
from .errors import RQError  # noqa: E402
from .io import load_image, read_rqt, save_checkpoint, load_checkpoint, write_manifest, write_png, write_rqt  # noqa: E402
from .kernels import build_filterbank  # noqa: E402
from .metrics import add_gaussian_noise, psnr_report, ssim  # noqa: E402
from .synthetic import dataset, one_hot, piecewise_constant, smooth_series, two_class_scene  # noqa: E402
from .transform import RQSmoother, shrink_smooth  # noqa: E402

log = logging.getLogger("rqframe")


# ---------------------------------------------------------------------------
# helpers


def _load_input(spec: str, cfg: RunConfig, series: bool = False) -> np.ndarray:
    """``synthetic:SEED`` or a ``.rqt``/``.png`` path."""
    if spec.startswith("synthetic:"):
        seed = int(spec.split(":", 1)[1] or cfg.seed)
        return smooth_series(seed) if series else piecewise_constant(seed)
    arr = load_image(spec)
    return arr


def _write_spectrum(path: Path, spectrum) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "S_tau"])
        for tau, s in enumerate(spectrum, start=1):
            w.writerow([tau, repr(float(s))])
    return path


def _display(x: np.ndarray, signed: bool) -> np.ndarray:
    # signed components are min-max scaled for viewing only
    if not signed:
        return x
    lo, hi = float(x.min()), float(x.max())
    return (x - lo) / (hi - lo) if hi > lo else np.zeros_like(x)


def _write_pngs(out: Path, name: str, img: np.ndarray, signed: bool) -> list[Path]:
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[None]
    return [write_png(out / f"{name}_band{p}.png", _display(b, signed)) for p, b in enumerate(img)]


def _finish(args, cfg: RunConfig, outputs: list[Path]) -> int:
    write_manifest(Path(args.out) / "manifest.json", cfg.to_dict(), cfg.seed, outputs, args.command)
    for o in outputs:
        print(f"wrote {o}")
    return 0


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _thresholds(cfg: RunConfig, N: int) -> tuple[int, int]:
    tau1 = min(cfg.tau1, N)
    tau2 = cfg.tau2 if cfg.tau2 >= tau1 else tau1
    return tau1, min(tau2, N)


# ---------------------------------------------------------------------------
# commands


def cmd_denoise(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    f = _load_input(args.input, cfg)
    noisy = add_gaussian_noise(f, args.noise, cfg.seed) if args.noise else f
    smoother = RQSmoother(cfg.kernel_config(), cfg.prox_rule())
    if args.scheme == 1:
        result = smoother(noisy, cfg.mu)
    else:
        result = scheme2_denoise(noisy, max(cfg.iters, 1), cfg.mu, smoother)
    outputs = [write_rqt(out / "denoised.rqt", result)]
    if args.noise:
        outputs.append(write_rqt(out / "noisy.rqt", noisy))
        for label, img in (("noisy", noisy), ("denoised", result)):
            rep = psnr_report(f, img)
            print(f"{label}: PSNR(max) {rep['psnr_max']:.3f} dB  PSNR(max^2) {rep['psnr_max2']:.3f} dB"
                  f"  SSIM {ssim(f, img):.4f}")
    return _finish(args, cfg, outputs)


def cmd_decompose(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    f = _load_input(args.input, cfg)
    N = max(cfg.iters, 2)
    smoother = RQSmoother(cfg.kernel_config(), cfg.prox_rule())
    rec = diffuse(f, N, cfg.mu, cfg.beta, smoother)
    tau1, tau2 = _thresholds(cfg, N)
    parts = {
        "lowpass": spectral_filter(rec, SpectralFilter("lowpass", tau2)),
        "bandpass": spectral_filter(rec, SpectralFilter("bandpass", tau1, tau2)),
        "highpass": spectral_filter(rec, SpectralFilter("highpass", tau1)),
    }
    chosen = SpectralFilter(cfg.filter, tau1, tau2)
    outputs = [write_rqt(out / "filtered.rqt", spectral_filter(rec, chosen))]
    for name, img in parts.items():
        outputs.append(write_rqt(out / f"{name}.rqt", img))
        outputs += _write_pngs(out, name, img, signed=name != "lowpass")
    outputs.append(_write_spectrum(out / "spectrum.csv", rec.spectrum))
    return _finish(args, cfg, outputs)


def cmd_timeseries(args, cfg: RunConfig) -> int:
    out = _outdir(args)
    v = _load_input(args.input, cfg, series=True)
    N = max(cfg.iters, 2)
    smoother = RQSmoother(cfg.kernel_config(), cfg.prox_rule())
    tau1, tau2 = _thresholds(cfg, N)
    dec = scheme2_series(
        v, N, cfg.mu, cfg.mu_time, cfg.beta, smoother,
        time_levels=cfg.time_levels, prox=cfg.prox_rule(), tau1=tau1, tau2=tau2,
    )
    outputs = [
        write_rqt(out / "lowpass.rqt", dec.lowpass),
        write_rqt(out / "bandpass.rqt", dec.bandpass),
        write_rqt(out / "highpass.rqt", dec.highpass),
        _write_spectrum(out / "spectrum.csv", dec.record.spectrum),
    ]
    return _finish(args, cfg, outputs)


def _training_data(spec: str, cfg: RunConfig, segment: bool):
    if spec.startswith("synthetic:"):
        n = int(spec.split(":", 1)[1] or 20)
        if segment:
            pairs = [two_class_scene(cfg.seed * 1000 + i) for i in range(n)]
            return np.stack([p[0] for p in pairs]), one_hot(np.stack([p[1] for p in pairs]), 2)
        return dataset(n, seed=cfg.seed), None
    files = sorted(p for p in Path(spec).iterdir() if p.suffix in (".rqt", ".png") and ".mask" not in p.name)
    if not files:
        raise RQError(f"no .rqt or .png images in {spec}")
    data = np.stack([load_image(p) for p in files])
    if not segment:
        return data, None
    labels = np.stack([read_rqt(p.with_name(p.stem + ".mask.rqt")).astype(np.int64) for p in files])
    return data, one_hot(labels, int(labels.max()) + 1)


def cmd_train(args, cfg: RunConfig) -> int:
    from .neural import AdamConfig, VaeConfig, init_model, segment_train, train

    out = _outdir(args)
    segment = args.task == "segment"
    data, masks = _training_data(args.data, cfg, segment)
    vcfg = VaeConfig(
        bands=data.shape[1], depth=cfg.depth, base_channels=cfg.base_channels,
        latent_dim=cfg.latent_dim, n1=data.shape[2], n2=data.shape[3], sigma=cfg.obs_sigma,
        classes=masks.shape[1] if segment else 0,
    )
    model = init_model(vcfg, cfg.seed)
    opt = AdamConfig(lr=cfg.lr)
    if segment:
        res = segment_train(model, data, masks, cfg.epochs, cfg.batch, opt, cfg.seed)
    else:
        res = train(model, data, cfg.epochs, cfg.batch, opt, cfg.seed)
    ckpt = save_checkpoint(out / "model", res.model, cfg.seed)
    loss_path = out / "losses.csv"
    with loss_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss"])
        for i, v in enumerate(res.losses):
            w.writerow([i, repr(float(v))])
    outputs = sorted(ckpt.glob("*.rqt")) + [loss_path]
    return _finish(args, cfg, outputs)


def cmd_segment(args, cfg: RunConfig) -> int:
    from .neural import segment_predict

    out = _outdir(args)
    model = load_checkpoint(args.model)
    if args.input.startswith("synthetic:"):
        img, truth = two_class_scene(int(args.input.split(":", 1)[1] or cfg.seed), model.config.n1)
    else:
        img = load_image(args.input)
        truth = read_rqt(args.truth).astype(np.int64) if args.truth else None
    if args.noise:
        img = add_gaussian_noise(img, args.noise, cfg.seed)
    res = segment_predict(model, img, cfg.mu, cfg.runs, cfg.seed, truth,
                          RQSmoother(cfg.kernel_config(), cfg.prox_rule()))
    outputs = [write_rqt(out / "class_map.rqt", res.class_map)]
    if res.accuracy is not None:
        outputs += [write_rqt(out / "accuracy.rqt", res.accuracy), write_rqt(out / "accuracy_std.rqt", res.std)]
        flag = "  (single run: std degenerate)" if res.degenerate else ""
        print(f"mean pixel accuracy {res.mean_accuracy:.4f}  "
              f"mean std {float(res.std.mean()):.4f}{flag}")
    return _finish(args, cfg, outputs)


def cmd_metrics(args, cfg: RunConfig) -> int:
    ref, cand = load_image(args.ref), load_image(args.cand)
    rep = psnr_report(ref, cand)
    print(f"SSIM {ssim(ref, cand):.6f}")
    print(f"PSNR(max) {rep['psnr_max']:.6f}")
    print(f"PSNR(max^2) {rep['psnr_max2']:.6f}")
    return 0


def cmd_bank_inspect(args, cfg: RunConfig) -> int:
    bank = build_filterbank(cfg.kernel_config(), args.n1, args.n2)
    res = bank.unity_residual()
    I1, L1 = bank.wavelet_primal.shape[:2]
    print(f"grid {bank.shape}  scales 0..{I1 - 1}  channels 0..{L1 - 1}  id {bank.bank_id}")
    print(f"unity residual max {float(np.max(np.abs(res))):.3e}")
    print(f"scaling |phi| max {float(np.max(np.abs(bank.scaling_primal))):.4f}")
    for i in range(I1):
        e = [float(np.sum(np.abs(bank.wavelet_primal[i, l]) ** 2)) for l in range(L1)]
        print(f"scale {i}: primal energy " + " ".join(f"{x:.4g}" for x in e))
    if args.out:
        out = _outdir(args)
        outputs = [
            write_rqt(out / "scaling_primal_abs.rqt", np.abs(bank.scaling_primal)),
            write_rqt(out / "wavelet_primal_abs.rqt", np.abs(bank.wavelet_primal)),
        ]
        return _finish(args, cfg, outputs)
    return 0


# ---------------------------------------------------------------------------
# parser


_CONFIG_FLAGS = {
    "seed": int, "gamma": float, "riesz-order": int, "scales": int, "alias-radius": int,
    "mu": float, "iters": int, "beta": float, "prox": str, "filter": str, "tau1": int,
    "tau2": int, "mu-time": float, "time-levels": int, "epochs": int, "batch": int,
    "lr": float, "depth": int, "base-channels": int, "latent-dim": int, "obs-sigma": float,
    "runs": int,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rqframe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", help="key = value file")
        sp.add_argument("--out", required=out_required, help="output directory")
        for flag, typ in _CONFIG_FLAGS.items():
            sp.add_argument(f"--{flag}", type=typ, default=None)

    sp = sub.add_parser("denoise", help="scheme 1 (shrinkage) or scheme 2 (iterative)")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--scheme", type=int, choices=(1, 2), default=1)
    sp.add_argument("--noise", type=float, default=0.0, help="add Gaussian noise first")

    sp = sub.add_parser("decompose", help="diffusion spectral decomposition")
    common(sp)
    sp.add_argument("--input", required=True)

    sp = sub.add_parser("timeseries", help="space-time diffusion decomposition")
    common(sp)
    sp.add_argument("--input", required=True)

    sp = sub.add_parser("train", help="train the autoencoder")
    common(sp)
    sp.add_argument("--data", required=True, help="directory or synthetic:N")
    sp.add_argument("--task", choices=("reconstruct", "segment"), default="reconstruct")

    sp = sub.add_parser("segment", help="segment with a trained checkpoint")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--truth")
    sp.add_argument("--noise", type=float, default=0.0)

    sp = sub.add_parser("metrics", help="PSNR and SSIM between two images")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--cand", required=True)

    sp = sub.add_parser("bank-inspect", help="build a filter bank and report it")
    common(sp, out_required=False)
    sp.add_argument("--n1", type=int, default=64)
    sp.add_argument("--n2", type=int, default=64)
    return p


_COMMANDS = {
    "denoise": cmd_denoise,
    "decompose": cmd_decompose,
    "timeseries": cmd_timeseries,
    "train": cmd_train,
    "segment": cmd_segment,
    "metrics": cmd_metrics,
    "bank-inspect": cmd_bank_inspect,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {k: getattr(args, k.replace("-", "_"), None) for k in _CONFIG_FLAGS}
        cfg = load_config(getattr(args, "config", None), overrides)
        return _COMMANDS[args.command](args, cfg)
    except RQError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
