"""Fit TSK and rough-set models on synthetic X, Y, Z data and write lattice predictions.

Writes lattice_tsk.csv, lattice_rough.csv and divergence_tsk.csv to --out.
"""

import argparse
from pathlib import Path

from softgran import lattice, nfis, rst, sorst
from softgran.lattice import Axis
from softgran.synth import synth_table


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--out", default="xyz_out")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    table = synth_table(args.n, "xyz", seed=args.seed)
    inputs = table.condition_names
    x, y = table.matrix(inputs), table.matrix([table.decision_name])[:, 0]
    model = nfis.build_tsk_model(nfis.subtractive_cluster(x), x, y, 0.5, inputs)
    model = nfis.train_tsk(model, x, y, epochs=50)

    sym, level_maps = sorst.discretize_table(table, sorst.SorstConfig(levels_per_attribute=5,
                                                                      seed=args.seed))
    rules = rst.induce_rules(sym, "minimal", exact_only=True)

    lo, hi = x.min(axis=0), x.max(axis=0)
    axes = tuple(Axis(n, float(a), float(b), float(b - a) / 9) for n, a, b in zip(inputs, lo, hi))
    tsk_lat = lattice.predict_tsk_lattice(model, axes)
    rough_lat = lattice.predict_rough_lattice(rules, level_maps, axes)
    (out / "lattice_tsk.csv").write_text(lattice.dump_lattice(tsk_lat, "lugeon"))
    (out / "lattice_rough.csv").write_text(lattice.dump_lattice(rough_lat, "lugeon_class"))
    (out / "divergence_tsk.csv").write_text(lattice.dump_lattice(lattice.divergence(tsk_lat), "div"))
    print(f"{model.n_rules} TSK rules, {len(rules)} rough rules, {tsk_lat.n_nodes} nodes -> {out}")


if __name__ == "__main__":
    main()
