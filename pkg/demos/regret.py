"""Regret of the impatient user against a far-sighted one, by simulation."""

from pathlib import Path

from stackelberg_align import load_scenario
from stackelberg_align.simulator import regret_curve

DATA = Path(__file__).parent / "data" / "s1.json"
T = 30


def main():
    sc = load_scenario(DATA)
    for g in (0.4, 0.6):
        curve = regret_curve(sc, g, T, reps=2000, seed=7, type_ids=["theta1"])["theta1"]
        print(f"gamma_user={g}")
        for t in (1, 2, 5, 10, 20, 30):
            print(f"  t={t:2d}  actual {curve.value_actual[t - 1]:7.2f}"
                  f"  baseline {curve.value_baseline[t - 1]:7.2f}  regret {curve.regret[t - 1]:6.2f}")


if __name__ == "__main__":
    main()
