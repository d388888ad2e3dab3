#!/usr/bin/env python3
"""Sample-and-solve trials against a hidden instance, across accuracy levels.

Each trial draws fresh samples through the query oracle, solves the relaxed
problem on the empirical model, and scores the returned contract on the true
setting. The summary line per eps shows how often the claimed slack level and
the payoff floor actually held, next to the per-action sample bill.
"""

import argparse
import json
import sys

from contract_forge.blackbox import QueryOracle, blackbox_contract
from contract_forge.exact import opt_contract
from contract_forge.model import ADDITIVE, ic_slack, load_setting
from contract_forge.generators import gen_random


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instance", help="instance JSON; default is a seeded random 2x2")
    parser.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    parser.add_argument("--gamma", type=float, default=0.1)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if args.instance:
        hidden = load_setting(args.instance)
    else:
        hidden = gen_random(2, 2, seed=args.seed)
    opt = opt_contract(hidden).payoff
    print(json.dumps({"opt_payoff": opt, "trials": args.trials, "gamma": args.gamma}))
    print("eps,samples_per_action,ic_ok,payoff_ok,mean_payoff", file=sys.stdout)
    for eps in args.eps:
        ic_ok = payoff_ok = 0
        total = 0.0
        samples = None
        for trial in range(args.trials):
            oracle = QueryOracle(hidden, seed=args.seed + 1000 * trial)
            res = blackbox_contract(oracle, eps, args.gamma)
            samples = res.samples_per_action
            if ic_slack(hidden, res.contract, res.action, res.claimed_delta, ADDITIVE) >= -1e-9:
                ic_ok += 1
            if res.payoff_on_true >= res.payoff_bound - 1e-9:
                payoff_ok += 1
            total += res.payoff_on_true
        print(f"{eps},{samples},{ic_ok}/{args.trials},{payoff_ok}/{args.trials},{total / args.trials:.6f}")


if __name__ == "__main__":
    main()
