"""PSNR of Scheme 1 and Scheme 2 over a threshold sweep on synthetic images.

    python3 scripts/denoise_sweep.py --seeds 3 --sigma 0.04 --iters 10
"""

import argparse

import numpy as np

from rqframe.diffusion import scheme2_denoise
from rqframe.kernels import KernelConfig
from rqframe.metrics import add_gaussian_noise, psnr
from rqframe.synthetic import piecewise_constant
from rqframe.transform import RQSmoother


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--sigma", type=float, default=0.04)
    ap.add_argument("--iters", type=int, default=10)
    ap.add_argument("--scales", type=int, default=3)
    ap.add_argument("--n-mu", type=int, default=12)
    args = ap.parse_args()

    S = RQSmoother(KernelConfig(scales=args.scales))
    mus = np.geomspace(0.003, 0.3, args.n_mu)
    print("seed,mu,psnr_noisy,psnr_scheme1,psnr_scheme2")
    for seed in range(args.seeds):
        f = piecewise_constant(seed)
        g = add_gaussian_noise(f, args.sigma, 1000 + seed)
        p0 = psnr(f, g)
        for mu in mus:
            p1 = psnr(f, S(g, mu))
            p2 = psnr(f, scheme2_denoise(g, args.iters, mu, S))
            print(f"{seed},{mu:.4g},{p0:.3f},{p1:.3f},{p2:.3f}")


if __name__ == "__main__":
    main()
