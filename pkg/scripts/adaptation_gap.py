"""Risk of the adaptive estimator over two smoothness classes on a uniform design.

Prints risk / psi (minimax rate) and risk / r (adaptive rate) for each class.
"""

from adalopo import experiments as ex
from adalopo.rvdesign import DesignSpec

from _common import CUSP_SIGMA, parser


def main():
    p = parser(__doc__.splitlines()[0], 200)
    p.add_argument("--n-values", default="1000,4000,16000,64000")
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    n_values = [int(v) for v in args.n_values.split(",")]
    rows = ex.adaptation_gap_report(
        1.0, 1.0, 2.0, 1.0, DesignSpec.uniform(0.5), n_values, sigma=CUSP_SIGMA,
        replications=args.replications, jobs=args.jobs,
    )
    ex.write_gap_csv(rows, args.out / "gap.csv")
    for g in rows:
        print(f"class {g.cls} n = {g.n:6d}  risk {g.risk:.5f}  /psi {g.over_psi:.3f}  /rate {g.over_rate:.3f}")


if __name__ == "__main__":
    main()
