"""How the algorithm reads engagement.

Solves the two-type scenario, then prints the per-type weights, the value of
each first content and the content chosen across the belief simplex.
"""

from pathlib import Path

import numpy as np

from stackelberg_align import load_scenario
from stackelberg_align import algo_policy as ap
from stackelberg_align.domain import Content
from stackelberg_align.equilibrium import solve_equilibrium

DATA = Path(__file__).parent / "data" / "s1.json"


def main():
    sc = load_scenario(DATA)
    prof = solve_equilibrium(sc).profile
    h = ap.classifier_weights(sc, prof)
    q = ap.q_vector(sc, prof)
    for i, t in enumerate(sc.types):
        print(f"{t.id}: h={h[i]:+.3f}  Q(A)={q.q_a[i]:.3f}  Q(B)={q.q_b[i]:.3f}")
    print("\nlambda_1  score    Q_A(A)   Q_A(B)   choice")
    for l1 in np.linspace(0, 1, 11):
        lam = np.array([l1, 1 - l1])
        qa = ap.qa_value(sc, prof, lam, Content.A)
        qb = ap.qa_value(sc, prof, lam, Content.B)
        print(f"{l1:8.1f}  {lam @ h:+7.3f}  {qa:7.3f}  {qb:7.3f}   {ap.best_content(sc, prof, lam).name}")


if __name__ == "__main__":
    main()
