"""Run SORST over seven random SOM structures on the synthetic dam table and print the rules."""

import argparse

from softgran import rst, sorst
from softgran.data import encode_twr_column, split_train_test
from softgran.synth import synth_table


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--structures", type=int, default=7)
    p.add_argument("--threshold", type=float, default=0.2)
    args = p.parse_args()

    table = encode_twr_column(synth_table(789, "dam5", seed=args.seed))
    split = split_train_test(table, 600, 93, seed=args.seed)
    cfg = sorst.SorstConfig(structures=args.structures, strength_threshold=args.threshold,
                            seed=args.seed)
    res = sorst.run_sorst(split.train, split.test, cfg)
    print(sorst.dump_summary(res), end="")
    if res.empty:
        print("no structure kept a rule:", "; ".join(res.diagnostics))
        return
    print(f"\nbest structure {res.best_index}, MSE {res.best.test_mse:.4f}")
    print(rst.format_rules(res.best.rule_set), end="")


if __name__ == "__main__":
    main()
