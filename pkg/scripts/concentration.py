"""Compare empirical window-count deviations with the Bernstein bound."""

from adalopo import experiments as ex
from adalopo.rvdesign import DesignSpec

from _common import parser


def main():
    p = parser(__doc__, 1000)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--n", type=int, default=10_000)
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rows = ex.concentration_check(DesignSpec.power(0.5, args.beta), args.h, args.n, args.replications, 0)
    ex.write_concentration_csv(rows, args.out / "concentration.csv")
    for r in rows:
        verdict = "ok" if r.ok else "exceeds"
        print(f"eps {r.eps:4g}  exceedance {r.exceedance:.4f}  bound {r.bound:.4f}  se {r.stderr:.4f}  {verdict}")


if __name__ == "__main__":
    main()
