"""Bell-test table for the bench and the three field conditions.

Runs each shipped scenario and prints mean |S|, the mean per-trial error
bar, the trial-to-trial spread and the violation in standard deviations.

Run: python3 scripts/field_table.py [--trials N] [--workers N]
"""
import argparse
import time

from qdrone.harness.scenario import load_scenario
from qdrone.harness.session import run_chsh_session

SCENARIOS = ("lab", "field-day", "field-clear-night", "field-rainy-night")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, help="override each scenario's trial count")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    print(f"{'scenario':<20}{'|S|':>8}{'sigma':>8}{'spread':>8}{'n sigma':>9}{'trials':>8}{'secs':>7}")
    for name in SCENARIOS:
        scenario = load_scenario(name).with_overrides(trials=args.trials)
        t0 = time.perf_counter()
        s = run_chsh_session(scenario, workers=args.workers).summary
        secs = time.perf_counter() - t0
        print(f"{name:<20}{s['mean_abs_S']:>8.3f}{s['mean_sigma']:>8.3f}{s['std_abs_S']:>8.3f}"
              f"{s['violation_sigmas']:>9.2f}{s['ok_trials']:>8d}{secs:>7.1f}")


if __name__ == "__main__":
    main()
