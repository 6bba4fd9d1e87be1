"""Fit the pointwise rate exponent for a cusp of order 1 at a design zero.

The design has index beta at x0 = 0.5; with s = 1 the adaptive exponent is
s / (1 + 2s + beta).  The risk table goes to ``rate_beta<beta>.csv``.
"""

import math

from adalopo import experiments as ex
from adalopo.rvdesign import DesignSpec
from adalopo.testbed import DatasetSpec

from _common import CUSP, CUSP_SIGMA, parser


def main():
    p = parser(__doc__.splitlines()[0], 200)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--n-values", default="500,1000,2000,4000,8000,16000")
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    n_values = [int(v) for v in args.n_values.split(",")]
    ds = DatasetSpec(CUSP, DesignSpec.power(0.5, args.beta), n_values[0], noise_sd=CUSP_SIGMA)
    cfg = ex.RunConfig(
        ds, selector="symmetric", kappa=1, sigma="known", eval_points=(0.5,), replications=args.replications
    )
    rep = ex.rate_study(cfg, n_values, 1.0, jobs=args.jobs)
    ex.write_rate_csv(rep, args.out / f"rate_beta{args.beta:g}.csv")
    for n, r in rep.table.items():
        print(f"n = {n:6d}  risk {r:.5f}  risk / (log n / n)^e {r / (math.log(n) / n) ** rep.theoretical:.4f}")
    print(f"slope {rep.slope:.4f} +- {rep.stderr:.4f}, theoretical {rep.theoretical:.4f}")


if __name__ == "__main__":
    main()
