#!/usr/bin/env python3
"""Quick capture-threshold scan for one particle kind.

Runs small ensembles over a velocity ladder and prints capture fractions;
useful when tuning waist or detuning before a full curve.

Usage: scripts/capture_threshold_scan.py configs/capture_rod.cfg [N]
"""

import sys

from cavrotor.config import parse_config
from cavrotor.ensemble import EnsembleConfig, capture_curve


def main():
    cfg_path = sys.argv[1] if len(sys.argv) > 1 else "configs/capture_rod.cfg"
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    run = parse_config(cfg_path)
    ens = EnsembleConfig(trajectories=n,
                         v_z_spread=run.ensemble.v_z_spread,
                         rotation_frequency=run.ensemble.rotation_frequency)
    results = capture_curve(run.sim, run.vx_grid, run.seed, ens,
                            run.integrator, threads=4)
    print(f"{'v_x':>6} {'p':>7} {'95% CI':>17} {'cap/trans/und':>15}")
    for r in results:
        print(f"{r.v_x:6.3f} {r.p_capture:7.3f} "
              f"[{r.ci_low:6.3f}, {r.ci_high:6.3f}] "
              f"{r.n_captured:5d}/{r.n_transmitted}/{r.n_undecided}")


if __name__ == "__main__":
    main()
