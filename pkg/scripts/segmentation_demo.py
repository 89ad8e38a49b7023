"""Train the segmentation network on two-class scenes and compare thresholds.

    python3 scripts/segmentation_demo.py --epochs 50 --contrast 0.4 --sigma 0.1
"""

import argparse

import numpy as np

from rqframe.metrics import add_gaussian_noise
from rqframe.neural.model import VaeConfig, init_model
from rqframe.neural.smooth import segment_predict, skip_smoother
from rqframe.neural.train import segment_train
from rqframe.synthetic import one_hot, two_class_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--images", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--contrast", type=float, default=0.4)
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--mu", type=float, nargs="+", default=[0.0, 0.1, 0.5])
    args = ap.parse_args()

    pairs = [two_class_scene(s, 32, contrast=args.contrast) for s in range(args.images)]
    X = np.stack([a for a, _ in pairs])
    M = one_hot(np.stack([b for _, b in pairs]), 2)
    cfg = VaeConfig(bands=3, depth=2, base_channels=4, latent_dim=16, n1=32, n2=32, classes=2)
    res = segment_train(init_model(cfg, 0), X, M, args.epochs, seed=0)
    print(f"training loss {res.losses[0]:.2f} -> {res.losses[-1]:.2f}")
    sm = skip_smoother()
    for mu in args.mu:
        accs, stds = [], []
        for s in range(100, 110):
            img, lab = two_class_scene(s, 32, contrast=args.contrast)
            out = segment_predict(res.model, add_gaussian_noise(img, args.sigma, s), mu,
                                  args.runs, seed=s, truth=lab, smoother=sm)
            accs.append(out.mean_accuracy)
            stds.append(float(out.std.mean()))
        print(f"mu={mu:<5g} accuracy {np.mean(accs):.4f}  mean std {np.mean(stds):.4f}")


if __name__ == "__main__":
    main()
