"""Random property suites: contraction, gradient bound, level relation, beta ordering."""

from _common import parser, save, setup

from capillary_mm import experiments as ex
from capillary_mm.grid import build_strip, set_beta
from capillary_mm.solver import SolverConfig


def main():
    p = parser(__doc__)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--which", nargs="+", default=["contraction", "gradient", "levels", "beta"])
    args = p.parse_args()
    out = setup(args)
    if "contraction" in args.which:
        d = set_beta(build_strip(2.0, 2.0, 64), 0.3)
        res = ex.contraction_suite(d, args.trials, SolverConfig(tol=1e-8, max_iter=200000), seed=args.seed)
        save(res.rows(), out, "contraction.csv", args)
    if "gradient" in args.which:
        res = ex.gradient_bound_study(nx=64, trials=20, seed=args.seed)
        save(res.rows(), out, "gradient_bound.csv", args)
        print(f"gradient bound: worst C {res.worst_constant:.3f}")
    if "levels" in args.which:
        d = set_beta(build_strip(2.0, 2.0, 32), {"left": 0.4, "right": -0.2, "bottom": 0.1, "top": 0.0})
        res = ex.level_relation_suite(d, n_fields=20, seed=args.seed)
        save(res.rows(), out, "level_relation.csv", args)
    if "beta" in args.which:
        res = ex.beta_monotonicity_suite(build_strip(2.0, 2.0, 32), n_fields=10, seed=args.seed)
        save(res.rows(), out, "beta_monotonicity.csv", args)
        print(f"beta ordering: {res.violations} violations, reverse {res.reverse_violations}")


if __name__ == "__main__":
    main()
