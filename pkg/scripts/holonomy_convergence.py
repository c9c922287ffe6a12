"""Step-size sweep for the transport integrator on the flux oracle.

The corrected chain stays unitary by construction, so the order of the
method is measured on the uncorrected (raw) holonomy against the exact
phase exp(i B pi r^2).  Expected: error ratio ~16 per grid doubling.
"""

import argparse
import math

import numpy as np

from loopfiber import transport


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--B", type=float, default=1.0)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--grids", type=int, nargs="+",
                    default=[64, 128, 256, 512, 1024, 2048])
    args = ap.parse_args()

    conn = transport.abelian2d(args.B)
    loop = transport.BaseLoop.circle(args.radius)
    exact = np.exp(1j * args.B * math.pi * args.radius ** 2)

    print(f"{'N':>6}  {'raw error':>12}  {'ratio':>7}  {'corrected delta':>16}")
    prev = None
    for N in args.grids:
        frame = transport.parallel_transport(conn, loop, N=N)
        raw_err = abs(frame.raw_holonomy[0, 0] - exact)
        corr_err = abs(frame.holonomy[0, 0] - exact)
        ratio = "" if prev is None or raw_err == 0 else f"{prev / raw_err:7.2f}"
        print(f"{N:>6}  {raw_err:12.3e}  {ratio:>7}  {corr_err:16.3e}")
        prev = raw_err


if __name__ == "__main__":
    main()
