"""Run the four sensor-placement presets and print a one-line summary for each.

    python scripts/run_scenarios.py [--out runs] [--K 1000] [--J 1000]
"""
import argparse
import dataclasses
import json
import os
import time

from ngf.config import PRESETS, preset
from ngf.runner import run


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--out", default="runs", help="parent directory for the run folders")
    parser.add_argument("--K", type=int, help="override the number of time steps")
    parser.add_argument("--J", type=int, help="override the number of quadrature points")
    parser.add_argument("--seed", type=int, help="override the seed (same for every scenario)")
    args = parser.parse_args(argv)

    overrides = {k: v for k, v in (("K", args.K), ("J", args.J), ("seed", args.seed)) if v is not None}
    for name in sorted(PRESETS):
        cfg = dataclasses.replace(preset(name), output_dir=os.path.join(args.out, name), **overrides).validate()
        start = time.perf_counter()
        result = run(cfg)
        summary = {k: result.summary.get(k) for k in ("median_err", "mean_err_t_le_3", "max_err", "final_err",
                                                      "final_xi", "eig_fraction_median")}
        print(f"{name:20s} {time.perf_counter() - start:6.1f}s status={result.status} {json.dumps(summary)}")


if __name__ == "__main__":
    main()
