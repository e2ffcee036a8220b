"""Check the closed-form policy against exact belief-space value iteration."""

from pathlib import Path

import numpy as np

from stackelberg_align import load_scenario
from stackelberg_align import oracle
from stackelberg_align.equilibrium import solve_equilibrium

DATA = Path(__file__).parent / "data" / "s1.json"


def main():
    sc = load_scenario(DATA)
    res = solve_equilibrium(sc)
    l1 = np.linspace(0, 1, 21)
    grid = np.column_stack([l1, 1 - l1])
    for method in oracle.METHODS:
        checks = oracle.policy_agreement(sc, res.profile, grid, oracle.OracleConfig(method=method))
        bad = [c for c in checks if c.closed_form is not c.oracle]
        print(f"{method:8s} bound {checks[0].error_bound:.2e}  disagreements {len(bad)}/{len(checks)}")
    report = oracle.verify_no_deviation(sc, res, raise_on_failure=False)
    for tid, d in report.per_type.items():
        print(f"{tid}: equilibrium {d.equilibrium_value:.4f}, best on grid {d.best_value:.4f}"
              f" ({d.grid_points} points)")
    print("no profitable deviation" if report.passed else "deviation found")


if __name__ == "__main__":
    main()
