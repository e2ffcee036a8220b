"""Cheap signals lower the patience needed to steer the algorithm."""

from pathlib import Path

import numpy as np

from stackelberg_align import load_scenario
from stackelberg_align.equilibrium import critical_gamma, solve_equilibrium

DATA = Path(__file__).parent / "data" / "s1.json"


def main():
    sc = load_scenario(DATA)
    print("cost    theta1 no-signal  with-signal  reduction")
    for c in np.linspace(0.0, 0.4, 9):
        cg = critical_gamma(sc, "theta1", float(c))
        sig = "-" if cg.with_signal is None else f"{cg.with_signal:.4f}"
        red = cg.reason if cg.reduction is None else f"{cg.reduction:.4f}"
        print(f"{c:4.2f}    {cg.no_signal:16.4f}  {sig:>11}  {red:>9}")

    # at gamma_user 0.45 theta1 is too impatient without signals but not with them
    for cost in (None, 0.05):
        s = sc.with_(gamma_user=0.45, cost=cost)
        res = solve_equilibrium(s)
        st = res.profile["theta1"]
        print(f"\ncost={cost}: theta1 plays f_a={st.f_a:.3f} u_a={st.u_a:.3f}"
              f" ({res.rationales['theta1'].name}), margin {res.margins['theta1']:+.3f}")


if __name__ == "__main__":
    main()
