#!/usr/bin/env python3
"""Validation-selected grid search for the Cora configs in data/configs.

Preprocessing runs once per (bias, T, normalization) at the deepest H; every
shallower H reuses the prefix of those hop features (walks at hop h do not
depend on H). Selection uses validation accuracy only; ties go to the first
grid point in iteration order. Test accuracy is printed for the record.

Requires the Python module (pip install --no-build-isolation .).
"""
import argparse
import itertools
import json
import pathlib
import time

import rmask

ROOT = pathlib.Path(__file__).resolve().parents[1]


def graph_section(data):
    return {"edge_list": str(data / "edges.txt"), "features": str(data / "features.txt"),
            "labels": str(data / "labels.txt"),
            "splits": {"train": str(data / "train.txt"), "val": str(data / "val.txt"),
                       "test": str(data / "test.txt")}}


def relative_graph_section():
    up = "../cora/"
    return {"edge_list": up + "edges.txt", "features": up + "features.txt", "labels": up + "labels.txt",
            "splits": {"train": up + "train.txt", "val": up + "val.txt", "test": up + "test.txt"}}


def logistic(lr, wd):
    return {"learning_rate": lr, "weight_decay": wd, "standardize": False, "max_epochs": 500, "patience": 200}


def mlp(lr, wd, dropout):
    return {"learning_rate": lr, "weight_decay": wd, "dropout": dropout, "num_layers": 2, "hidden_dim": 64,
            "standardize": False, "max_epochs": 300, "patience": 100}


def search(configs, hops_for, log):
    best = None
    for cfg in configs:
        t0 = time.time()
        hops = hops_for(cfg)
        m = rmask.evaluate(hops[:cfg["propagation"]["depth_H"] + 1], cfg)
        row = {"config": cfg, "val_acc": m["val_acc"], "test_acc": m["test_acc"]}
        log.write(json.dumps({k: v for k, v in row.items() if k != "config"} |
                             {"propagation": cfg["propagation"], "combine": cfg["combine"], "train": cfg["train"],
                              "seconds": round(time.time() - t0, 2)}) + "\n")
        log.flush()
        if best is None or row["val_acc"] > best["val_acc"]:
            best = row
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", type=pathlib.Path, default=ROOT / "data" / "cora")
    ap.add_argument("--out", type=pathlib.Path, default=ROOT / "data" / "configs")
    ap.add_argument("--log", type=pathlib.Path, default=pathlib.Path("tune_cora.jsonl"))
    ap.add_argument("--depths", type=int, nargs="+", default=[6, 10, 15])
    ap.add_argument("--walks", type=int, nargs="+", default=[10, 30])
    ap.add_argument("--bias", nargs="+", default=["uniform", "ppr"])
    ap.add_argument("--normalization", nargs="+", default=["accepted", "walks"])
    ap.add_argument("--methods", nargs="+", default=["s2gc_average"])
    ap.add_argument("--dropout", type=float, nargs="+", default=[0.0, 0.5])
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    graph = graph_section(args.data.resolve())
    args.out.mkdir(parents=True, exist_ok=True)
    log = open(args.log, "w")

    baseline_grid = [
        {"graph": graph, "propagation": {"mode": "baseline", "depth_H": 2},
         "combine": {"method": "last_hop"}, "train": logistic(lr, wd)}
        for lr, wd in itertools.product([0.2, 0.1, 0.01], [2e-3, 3.6e-3, 7e-3])]
    base_hops = rmask.preprocess(baseline_grid[0])[0]
    best_base = search(baseline_grid, lambda cfg: base_hops, log)
    print(f"baseline: val {best_base['val_acc']:.3f} test {best_base['test_acc']:.3f} "
          f"train {best_base['config']['train']}")

    cache = {}

    def rmask_hops(cfg):
        p = cfg["propagation"]
        key = (p["bias"], p["walks_T"], p["normalization"])
        if key not in cache:
            cache.clear()
            deep = dict(p, depth_H=max(args.depths))
            cache[key] = rmask.preprocess(dict(cfg, propagation=deep))[0]
        return cache[key]

    trains = [logistic(lr, wd) for lr in [0.1, 0.01] for wd in [5e-4, 2e-3, 7e-3, 2e-2]]
    trains += [mlp(0.01, wd, dr) for dr in args.dropout for wd in [5e-4, 5e-3]]
    rmask_grid = [
        {"graph": graph,
         "propagation": {"mode": "rmask", "depth_H": h, "walks_T": t, "bias": b, "seed": args.seed,
                         "normalization": n},
         "combine": {"method": method}, "train": tr}
        for b, t, n in itertools.product(args.bias, args.walks, args.normalization)
        for method, h, tr in itertools.product(args.methods, args.depths, trains)]
    best_rm = search(rmask_grid, rmask_hops, log)
    print(f"rmask: val {best_rm['val_acc']:.3f} test {best_rm['test_acc']:.3f} "
          f"propagation {best_rm['config']['propagation']} train {best_rm['config']['train']}")

    for name, best in [("cora_baseline.json", best_base), ("cora_rmask.json", best_rm)]:
        cfg = dict(best["config"], graph=relative_graph_section())
        cfg["output"] = {"directory": "../../out/" + name.removesuffix(".json")}
        (args.out / name).write_text(json.dumps(cfg, indent=2) + "\n")


if __name__ == "__main__":
    main()
