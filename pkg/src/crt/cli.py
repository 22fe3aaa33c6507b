"""Command-line interface: run one test on a CSV, or run the simulation studies.

    crt test     --data experiment.csv --statistic sd --sampler conditional \
                 --tiers "[[1,2],[3,4]]" --pa 0.1 --draws 1000 --seed 0 --out result.json
    crt power    --config study.cfg --out power.csv
    crt validity --config study.cfg --out deciles.csv

Tier lists on the command line and in config files are 1-based.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .balance import TierSpec
from .data import load_experiment_csv
from .estimator import RandomizationTest
from .simlab import read_config, run_conditional_validity_study, run_power_study, write_results
from .statistics import StratumLabels


def _strata_from_covariate_cells(X) -> StratumLabels:
    # treat covariate rows as categorical cells (distinct rows = strata)
    _, dense = np.unique(X, axis=0, return_inverse=True)
    return StratumLabels(c=dense + 1)


def _add_test_parser(sub):
    p = sub.add_parser("test", help="run one randomization test on a CSV experiment")
    p.add_argument("--data", required=True, help="CSV with columns x1..xp,w,y")
    p.add_argument("--statistic", default="sd", choices=("sd", "ps", "int"))
    p.add_argument("--sampler", default="complete", choices=("complete", "strata", "conditional"))
    p.add_argument(
        "--tiers",
        default=None,
        help='1-based covariate tiers as JSON, e.g. "[[1,2],[3,4]]"; default: one tier',
    )
    p.add_argument("--pa", type=float, default=0.1, help="overall acceptance fraction")
    p.add_argument(
        "--procedure",
        default="neighborhood",
        choices=("neighborhood", "bin"),
        help="bound selection for the conditional sampler",
    )
    p.add_argument("--reference-draws", type=int, default=1000)
    p.add_argument("--cutpoints", default=None, help="JSON list of bin cutpoints (0 .. inf)")
    p.add_argument("--draws", type=int, default=1000, help="Monte Carlo draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--add-one", action="store_true", help="use the (1+k)/(1+M) p-value")
    p.add_argument("--out", default=None, help="write the result as JSON here")


def _run_test(args) -> int:
    data = load_experiment_csv(args.data)
    tiers = None
    if args.tiers is not None:
        tiers = TierSpec.from_one_based(json.loads(args.tiers))
    cutpoints = None
    if args.cutpoints is not None:
        # accepts numbers plus "inf" for the final open-ended cutpoint
        cutpoints = [float(c) for c in json.loads(args.cutpoints)]
    strata = None
    if args.sampler == "strata" or args.statistic == "ps":
        strata = _strata_from_covariate_cells(data.X)
    test = RandomizationTest(
        statistic=args.statistic,
        sampler=args.sampler,
        draws=args.draws,
        strata=strata,
        tiers=tiers,
        procedure=args.procedure,
        acceptance=args.pa,
        reference_draws=args.reference_draws,
        cutpoints=cutpoints,
        include_observed=args.add_one,
        random_state=args.seed,
    )
    test.fit(data.X, data.y_obs, data.w_obs)
    result = {
        "t_obs": test.statistic_value_,
        "p_value": test.p_value_,
        "draws": test.result_.n_draws,
        "acceptance_rate": test.result_.acceptance_rate,
        "seed": args.seed,
        "config": {
            "data": args.data,
            "statistic": args.statistic,
            "sampler": args.sampler,
            "tiers": json.loads(args.tiers) if args.tiers else None,
            "pa": args.pa,
            "procedure": args.procedure,
            "reference_draws": args.reference_draws,
            "add_one": args.add_one,
        },
    }
    text = json.dumps(result, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="crt", description="randomization tests conditioned on covariate balance"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_test_parser(sub)
    for name, help_text in (
        ("power", "run the power study grid from a config file"),
        ("validity", "run the per-decile validity study from a config file"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    if args.command == "test":
        return _run_test(args)
    config = read_config(args.config)
    if args.command == "power":
        table = run_power_study(config)
    else:
        table = run_conditional_validity_study(config)
    write_results(table, args.out)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
