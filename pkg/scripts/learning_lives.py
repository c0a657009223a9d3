#!/usr/bin/env python3
"""Compare volatile and nonvolatile memory over repeated lives.

The learning_lab scenario seeds a preference for a station that can never be
found while a working beacon sits under the robot. With volatile memory each
life repeats the same fatal mistake; with nonvolatile memory the first death
is written into the weights and every later life goes straight to the beacon.

Usage: python3 scripts/learning_lives.py [--episodes N] [--seed S]
"""

import argparse
import tempfile
from pathlib import Path

from foragesim.scenarios import builtin_scenario
from foragesim.sim import MEMORY_NONVOLATILE, MEMORY_VOLATILE, SimConfig, run_monte_carlo


def block_fractions(results, block=10):
    out = []
    for i in range(0, len(results), block):
        chunk = results[i : i + block]
        survived = sum(r.outcome == "survived_to_horizon" for r in chunk)
        out.append(survived / len(chunk))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=100)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--steps", type=int, default=400)
    args = parser.parse_args()

    scenario = builtin_scenario("learning_lab")

    volatile_cfg = SimConfig(
        scenario=scenario, seed=args.seed, memory_mode=MEMORY_VOLATILE, max_steps=args.steps
    )
    volatile = run_monte_carlo(volatile_cfg, args.episodes)

    with tempfile.TemporaryDirectory() as tmp:
        nonvolatile_cfg = SimConfig(
            scenario=scenario,
            seed=args.seed,
            memory_mode=MEMORY_NONVOLATILE,
            max_steps=args.steps,
            weights_path=Path(tmp) / "weights.csv",
        )
        nonvolatile = run_monte_carlo(nonvolatile_cfg, args.episodes)

    print(f"episodes            : {args.episodes} x {args.steps} ticks, seed {args.seed}")
    print(f"volatile survival   : {volatile.survival_fraction:.3f} "
          f"(mean lifetime {volatile.mean_lifetime:.1f})")
    print(f"nonvolatile survival: {nonvolatile.survival_fraction:.3f} "
          f"(mean lifetime {nonvolatile.mean_lifetime:.1f})")
    print()
    print("survival per block of 10 lives")
    print("  volatile    :", " ".join(f"{f:.1f}" for f in block_fractions(volatile.results)))
    print("  nonvolatile :", " ".join(f"{f:.1f}" for f in block_fractions(nonvolatile.results)))
    print()
    flips = [
        i + 1
        for i, r in enumerate(nonvolatile.results)
        if r.first_choices.get("seek") == "find_wireless_power"
    ]
    if flips:
        print(f"nonvolatile first beacon-first life: episode {flips[0]}")
    else:
        print("nonvolatile never flipped to the beacon")


if __name__ == "__main__":
    main()
