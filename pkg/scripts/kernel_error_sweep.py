"""Maximum kernel approximation error of plain random features versus feature count.

Prints one ``s  median_max_error`` line per size and the log-log slope, which
should sit near -1/2.
"""

import argparse

import numpy as np

from rffrates.features import build_plain, feature_matrix
from rffrates.kernels import KernelSpec, kernel_eval


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kernel", default="gaussian", choices=["gaussian", "laplacian", "linear"])
    parser.add_argument("--bandwidth", type=float, default=1.0)
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--pairs", type=int, default=50)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--max-log2", type=int, default=14)
    args = parser.parse_args()

    spec = KernelSpec(args.kernel, args.bandwidth, args.dim)
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(args.pairs, args.dim)), rng.normal(size=(args.pairs, args.dim))
    exact = np.array([kernel_eval(spec, x, y) for x, y in zip(X, Y)])
    sizes = [2**k for k in range(6, args.max_log2 + 1)]
    medians = []
    for s in sizes:
        errs = []
        for seed in range(args.seeds):
            fmap = build_plain(spec, s, seed)
            approx = np.sum(feature_matrix(fmap, X) * feature_matrix(fmap, Y), axis=1)
            errs.append(np.abs(approx - exact).max())
        medians.append(float(np.median(errs)))
        print(f"{s:7d}  {medians[-1]:.5f}")
    print(f"slope {np.polyfit(np.log(sizes), np.log(medians), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
