"""Batch command line: ``softgran <command> [options]``.

Every command writes its artifacts into ``--out`` together with a
``manifest.json`` recording the command, the effective configuration, its
hash, the seed and digests of the input files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import lattice, nfis, rst, som, sonfis, sorst
from .config import as_dict, build, digest, file_digest, read_config
from .data import (DECISION, NUMERIC, SYMBOLIC, dump_decision_table,
                   encode_twr_column, load_decision_table, rmse, split_train_test)
from .errors import ConfigurationError, GranulationError
from .synth import synth_text

log = logging.getLogger("softgran")


# -- helpers -------------------------------------------------------------------

def _load(path, decision, delimiter=","):
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")
    table = load_decision_table(path, {decision: DECISION}, delimiter=delimiter)
    for a in table.attributes:
        if a.kind == SYMBOLIC and a.name.lower() == "twr":
            table = encode_twr_column(table, a.name)
    bad = [a.name for a in table.attributes if a.kind != NUMERIC]
    if bad:
        raise ConfigurationError(f"{path}: non-numeric attributes {bad}")
    return table


def _tables(args, cfg):
    if args.train:
        train = _load(args.train, args.decision, args.delimiter)
        test = _load(args.test, args.decision, args.delimiter) if args.test else None
        if test is None:
            raise ConfigurationError("--test is required with --train")
        return train, test, [args.train, args.test]
    if not args.data:
        raise ConfigurationError("give --data or --train/--test")
    table = _load(args.data, args.decision, args.delimiter)
    n_train = int(cfg.get("n_train", 600))
    n_test = int(cfg.get("n_test", 93))
    split = split_train_test(table, n_train, n_test, args.seed)
    return split.train, split.test, [args.data]


class Run:
    """Collects outputs for one command and writes the manifest last."""

    def __init__(self, args, command, config):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.seed = args.seed
        self.inputs = {}
        self.outputs = []

    def add_inputs(self, paths):
        for p in paths:
            if p:
                self.inputs[str(p)] = file_digest(p)

    def write(self, name, text):
        with open(self.out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.outputs.append(name)

    def finish(self):
        manifest = {
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "config_sha256": digest(self.config),
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(manifest, indent=1, sort_keys=True, default=str) + "\n")


def _file_config(args):
    return read_config(args.config) if args.config else {}


# -- commands -------------------------------------------------------------------

def cmd_synth(args):
    cfg = _file_config(args)
    n = args.n if args.n is not None else int(cfg.get("n_objects", 789))
    preset = args.preset or cfg.get("preset", "dam5")
    frac = float(cfg.get("reverse_fraction", 0.6))
    text = synth_text(n, preset, args.seed, reverse_fraction=frac)
    run = Run(args, "synth", {"n_objects": n, "preset": preset, "reverse_fraction": frac})
    run.write(args.name, text)
    run.finish()


def cmd_split(args):
    cfg = _file_config(args)
    n_train = args.n_train if args.n_train is not None else int(cfg.get("n_train", 600))
    n_test = args.n_test if args.n_test is not None else int(cfg.get("n_test", 93))
    if not os.path.exists(args.data):
        raise FileNotFoundError(f"input file not found: {args.data}")
    table = load_decision_table(args.data, {args.decision: DECISION}, delimiter=args.delimiter)
    split = split_train_test(table, n_train, n_test, args.seed)
    run = Run(args, "split", {"n_train": n_train, "n_test": n_test, "decision": args.decision})
    run.add_inputs([args.data])
    run.write("train.csv", dump_decision_table(split.train, args.delimiter))
    run.write("test.csv", dump_decision_table(split.test, args.delimiter))
    run.write("report.txt", f"train {len(split.train)}\ntest {len(split.test)}\n"
                            f"discarded {len(table) - n_train - n_test}\n")
    run.finish()


def _parse_dims(text):
    a, _, b = str(text).lower().partition("x")
    return (int(a), int(b) if b else 1)


def cmd_som_train(args):
    cfg = _file_config(args)
    if args.dims:
        cfg["dims"] = _parse_dims(args.dims)
    elif "dims" in cfg:
        cfg["dims"] = _parse_dims(cfg["dims"]) if isinstance(cfg["dims"], str) else tuple(cfg["dims"])
    topo = build(som.SomTopology, cfg, epochs=args.epochs, seed=args.seed)
    table = _load(args.data, args.decision, args.delimiter)
    grid = som.train_som(table.matrix(), topo, feature_names=table.names)
    gran = som.crisp_granulate(grid, table)
    run = Run(args, "som-train", as_dict(topo))
    run.add_inputs([args.data])
    run.write("grid.txt", som.dump_grid(grid))
    run.write("granules.csv", dump_decision_table(gran.prototypes_table, args.delimiter))
    run.write("report.txt", f"neurons {topo.n_neurons}\ngranules {len(gran.prototypes_table)}\n"
                            f"quantization_error {som.quantization_error(grid, table.matrix())!r}\n")
    run.finish()


def cmd_nfis_train(args):
    cfg = _file_config(args)
    epochs = args.epochs if args.epochs is not None else int(cfg.get("epochs", 100))
    step = float(cfg.get("step", 0.01))
    radius = args.radius if args.radius is not None else float(cfg.get("radius", 0.5))
    mfs = args.grid_mfs if args.grid_mfs is not None else cfg.get("grid_mfs")
    train = _load(args.train, args.decision, args.delimiter)
    inputs = train.condition_names
    x, y = train.matrix(inputs), train.matrix([args.decision])[:, 0]
    if mfs:
        model = nfis.build_grid_model(x, y, int(mfs), inputs)
    else:
        centers = nfis.subtractive_cluster(x, nfis.SubtractiveConfig(radius=radius))
        model = nfis.build_tsk_model(centers, x, y, radius, inputs)
    model = nfis.train_tsk(model, x, y, epochs, step)
    config = {"epochs": epochs, "step": step, "radius": radius, "grid_mfs": mfs,
              "decision": args.decision}
    run = Run(args, "nfis-train", config)
    run.add_inputs([args.train, args.test])
    report = [f"rules {model.n_rules}", f"train_rmse {nfis.training_rmse(model, x, y)!r}"]
    if args.test:
        test = _load(args.test, args.decision, args.delimiter)
        err = rmse(nfis.predict(model, test.matrix(inputs)), test.matrix([args.decision])[:, 0])
        report.append(f"test_rmse {err!r}")
    run.write("model.json", nfis.dump_model(model))
    run.write("report.txt", "\n".join(report) + "\n")
    run.finish()


def cmd_rst_rules(args):
    cfg = _file_config(args)
    table = _load(args.data, args.decision, args.delimiter)
    # coordinate tables default to five levels, attribute tables to three
    default_levels = 5 if {n.lower() for n in table.condition_names} == {"x", "y", "z"} else 3
    levels = args.levels if args.levels is not None else cfg.get("levels_per_attribute", default_levels)
    threshold = args.threshold if args.threshold is not None else float(cfg.get("strength_threshold", 0.0))
    strategy = args.strategy or cfg.get("strategy", "minimal")
    exact_only = not args.allow_inexact and bool(cfg.get("exact_only", True))
    scfg = sorst.SorstConfig(levels_per_attribute=levels, seed=args.seed)
    sym, level_maps = sorst.discretize_table(table, scfg)
    rules = rst.induce_rules(sym, strategy, exact_only, threshold)
    rules = sorst.strength_filter(rules, threshold)
    config = {"levels_per_attribute": levels, "strength_threshold": threshold,
              "strategy": strategy, "exact_only": exact_only, "decision": args.decision}
    run = Run(args, "rst-rules", config)
    run.add_inputs([args.data])
    run.write("rules.txt", rst.format_rules(rules))
    run.write("rules.json", rst.dump_rules(rules))
    run.write("levels.json", _dump_levels(level_maps))
    run.finish()


def _dump_levels(level_maps):
    return json.dumps({a: {str(k): v for k, v in m.items()} for a, m in level_maps.items()},
                      indent=1) + "\n"


def _load_levels(text):
    return {a: {int(k): float(v) for k, v in m.items()} for a, m in json.loads(text).items()}


def cmd_sonfis(args):
    cfg = _file_config(args)
    for key in ("mode", "iterations", "max_rules"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    config = build(sonfis.SonfisConfig, cfg, seed=args.seed)
    train, test, paths = _tables(args, cfg)
    result = sonfis.run_sonfis(train, test, config)
    run = Run(args, "sonfis", as_dict(config))
    run.add_inputs(paths)
    run.write("trace.csv", sonfis.dump_trace(result.trace))
    run.write("model.json", nfis.dump_model(result.best_model))
    run.write("grid.txt", som.dump_grid(result.best_grid))
    best = result.trace.best
    durability = sonfis.neuron_durability(result.trace, 1)
    lines = [
        f"mode {config.mode}",
        f"iterations {len(result.trace.records)}",
        f"criterion {config.criterion}",
        f"best_iteration {best.t}",
        f"best_neurons {best.neuron_count} ({best.grid_dims[0]}x{best.grid_dims[1]})",
        f"best_rules {best.rule_count}",
        f"best_granules {best.granule_count}",
        f"best_rmse {best.test_error!r}",
        "durability " + " ".join(f"{k}:{v}" for k, v in durability.items()),
    ]
    run.write("report.txt", "\n".join(lines) + "\n")
    run.finish()


def cmd_sorst(args):
    cfg = _file_config(args)
    if args.levels is not None:
        cfg["levels_per_attribute"] = args.levels
    if args.structures is not None:
        cfg["structures"] = args.structures
    if args.threshold is not None:
        cfg["strength_threshold"] = args.threshold
    config = build(sorst.SorstConfig, cfg, seed=args.seed)
    train, test, paths = _tables(args, cfg)
    result = sorst.run_sorst(train, test, config)
    run = Run(args, "sorst", as_dict(config))
    run.add_inputs(paths)
    run.write("summary.csv", sorst.dump_summary(result))
    lines = list(result.diagnostics)
    if result.empty:
        lines.append("no structure passed the checkpoint")
        run.write("report.txt", "\n".join(lines) + "\n")
        run.finish()
        raise GranulationError("SORST: every structure was rejected; see report.txt")
    best = result.best
    run.write("rules.txt", rst.format_rules(best.rule_set))
    run.write("rules.json", rst.dump_rules(best.rule_set))
    run.write("levels.json", _dump_levels(best.level_maps))
    run.write("predictions.csv", "object,predicted\n" + "".join(
        f"{oid},{p}\n" for oid, p in zip(test.object_ids, best.predictions)))
    lines += [f"best_structure {best.index}", f"best_neurons {best.neuron_count}",
              f"best_rules {len(best.rule_set)}", f"best_mse {best.test_mse!r}"]
    run.write("report.txt", "\n".join(lines) + "\n")
    run.finish()


def cmd_predict_grid(args):
    axes = [lattice.Axis.parse(s) for s in args.axis]
    run = Run(args, "predict-grid", {"axes": args.axis, "unknown_class": args.unknown_class})
    if args.model:
        model = nfis.load_model(Path(args.model).read_text(encoding="utf-8"))
        lat = lattice.predict_tsk_lattice(model, axes)
        run.add_inputs([args.model])
    elif args.rules:
        if not args.levels_file:
            raise ConfigurationError("--rules needs --levels-file")
        rules = rst.load_rules(Path(args.rules).read_text(encoding="utf-8"))
        level_maps = _load_levels(Path(args.levels_file).read_text(encoding="utf-8"))
        lat = lattice.predict_rough_lattice(rules, level_maps, axes, args.unknown_class)
        run.add_inputs([args.rules, args.levels_file])
    else:
        raise ConfigurationError("give --model or --rules")
    run.write("lattice.csv", lattice.dump_lattice(lat))
    run.finish()


def cmd_divergence(args):
    if not os.path.exists(args.lattice):
        raise FileNotFoundError(f"input file not found: {args.lattice}")
    lat, _ = lattice.load_lattice(Path(args.lattice).read_text(encoding="utf-8"))
    run = Run(args, "divergence", {})
    run.add_inputs([args.lattice])
    run.write("divergence.csv", lattice.dump_lattice(lattice.divergence(lat), "divergence"))
    run.finish()


# -- parser ---------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--delimiter", default=",")
    common.add_argument("--decision", default="lugeon", help="decision attribute name")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="softgran", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic borehole table")
    s.add_argument("--n", type=int)
    s.add_argument("--preset", choices=["dam5", "xyz"])
    s.add_argument("--name", default="data.csv")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("split", parents=[common], help="seeded train/test split")
    s.add_argument("--data", required=True)
    s.add_argument("--n-train", type=int)
    s.add_argument("--n-test", type=int)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("som-train", parents=[common], help="train a SOM and emit crisp granules")
    s.add_argument("--data", required=True)
    s.add_argument("--dims", help="grid size, e.g. 7x9")
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_som_train)

    s = sub.add_parser("nfis-train", parents=[common], help="fit a TSK model")
    s.add_argument("--train", required=True)
    s.add_argument("--test")
    s.add_argument("--radius", type=float)
    s.add_argument("--grid-mfs", type=int, help="grid seeding with this many MFs per input")
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_nfis_train)

    s = sub.add_parser("rst-rules", parents=[common], help="discretize and induce rough rules")
    s.add_argument("--data", required=True)
    s.add_argument("--levels", type=int)
    s.add_argument("--strategy", choices=list(rst.STRATEGIES))
    s.add_argument("--threshold", type=float)
    s.add_argument("--allow-inexact", action="store_true")
    s.set_defaults(func=cmd_rst_rules)

    for name, func in (("sonfis", cmd_sonfis), ("sorst", cmd_sorst)):
        s = sub.add_parser(name, parents=[common], help=f"run {name.upper()}")
        s.add_argument("--data")
        s.add_argument("--train")
        s.add_argument("--test")
        s.set_defaults(func=func)
        if name == "sonfis":
            s.add_argument("--mode", choices=["random", "adaptive"])
            s.add_argument("--iterations", type=int)
            s.add_argument("--max-rules", type=int)
        else:
            s.add_argument("--levels", type=int)
            s.add_argument("--structures", type=int)
            s.add_argument("--threshold", type=float)

    s = sub.add_parser("predict-grid", parents=[common], help="predict over a coordinate lattice")
    s.add_argument("--model")
    s.add_argument("--rules")
    s.add_argument("--levels-file")
    s.add_argument("--axis", action="append", required=True, help="name:start:stop:step")
    s.add_argument("--unknown-class", type=int, default=lattice.UNKNOWN_CLASS)
    s.set_defaults(func=cmd_predict_grid)

    s = sub.add_parser("divergence", parents=[common], help="divergence of a lattice's gradient")
    s.add_argument("--lattice", required=True)
    s.set_defaults(func=cmd_divergence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (GranulationError, OSError, KeyError, ValueError) as exc:
        print(f"softgran {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
