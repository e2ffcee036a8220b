"""Patience decides whether the tempted type gets its preferred content.

Sweeps the user's discount factor and reports the equilibrium strategy of
each type, its margin and why it was picked.
"""

from pathlib import Path

from stackelberg_align import load_scenario
from stackelberg_align.equilibrium import critical_gamma, solve_equilibrium
from stackelberg_align.errors import DegenerateGamma

DATA = Path(__file__).parent / "data" / "s1.json"


def main():
    sc = load_scenario(DATA)
    for t in sc.types:
        print(f"{t.id}: critical discount {critical_gamma(sc, t.id).no_signal:.3f}")
    print()
    for g in (0.2, 0.4, 0.5, 0.6, 0.8):
        try:
            res = solve_equilibrium(sc.with_(gamma_user=g))
        except DegenerateGamma as err:
            print(f"gamma_user={g}: degenerate ({err})")
            continue
        parts = []
        for tid, st in res.profile.items():
            why = res.rationales[tid].name
            parts.append(f"{tid}=(f_a {st.f_a:.2f}, f_b {st.f_b:.2f}) {why}")
        print(f"gamma_user={g}: " + "; ".join(parts))


if __name__ == "__main__":
    main()
