"""Run SONFIS on a synthetic 789-object dam table split 600/93 and print the trace."""

import argparse

from softgran import sonfis
from softgran.data import encode_twr_column, split_train_test
from softgran.synth import synth_table


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--mode", choices=["random", "adaptive"], default="random")
    args = p.parse_args()

    table = encode_twr_column(synth_table(789, "dam5", seed=args.seed))
    split = split_train_test(table, 600, 93, seed=args.seed)
    cfg = sonfis.SonfisConfig(max_rules=4, iterations=args.iterations, mode=args.mode, seed=args.seed)
    res = sonfis.run_sonfis(split.train, split.test, cfg)
    print(sonfis.dump_trace(res.trace), end="")
    best = res.trace.best
    print(f"best: t={best.t} neurons={best.neuron_count} rules={best.rule_count} "
          f"rmse={best.test_error:.4f}")


if __name__ == "__main__":
    main()
