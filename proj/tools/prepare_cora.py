#!/usr/bin/env python3
"""Convert the LINQS Cora release into an rmask dataset bundle.

The raw files (cora.content, cora.cites) ship inside the `pgl` wheel on PyPI;
pass --raw-dir to use a local copy instead of downloading the wheel.

Output layout:
    edges.txt      "N M" header followed by one "u v" pair per citation
    features.txt   one dense row of 0/1 word indicators per node
    labels.txt     one class id per line (classes sorted by name)
    train.txt / val.txt / test.txt
                   20 nodes per class for training, then 500 validation and
                   1000 test nodes drawn from the rest (seeded)
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

import numpy as np


def fetch_raw(dest: pathlib.Path) -> pathlib.Path:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "-d", tmp, "pgl==2.2.6"],
            check=True)
        wheel = next(pathlib.Path(tmp).glob("pgl-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            for name in ("cora.content", "cora.cites"):
                (dest / name).write_bytes(zf.read(f"pgl/data/cora/{name}"))
    return dest


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--raw-dir", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/cora"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--train-per-class", type=int, default=20)
    ap.add_argument("--num-val", type=int, default=500)
    ap.add_argument("--num-test", type=int, default=1000)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    raw = args.raw_dir
    if raw is None:
        raw = args.out / "raw"
        raw.mkdir(exist_ok=True)
        if not (raw / "cora.content").exists():
            fetch_raw(raw)

    rows = [line.split() for line in (raw / "cora.content").read_text().splitlines() if line.strip()]
    rows.sort(key=lambda r: int(r[0]))
    index = {r[0]: i for i, r in enumerate(rows)}
    classes = sorted({r[-1] for r in rows})
    labels = np.array([classes.index(r[-1]) for r in rows])
    feats = [r[1:-1] for r in rows]

    edges = []
    for line in (raw / "cora.cites").read_text().splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        a, b = parts
        if a in index and b in index and a != b:
            edges.append((index[b], index[a]))

    n = len(rows)
    with open(args.out / "edges.txt", "w") as f:
        f.write("# LINQS Cora citations, citing -> cited, 0-based node ids\n")
        f.write(f"{n} {len(edges)}\n")
        for u, v in edges:
            f.write(f"{u} {v}\n")
    with open(args.out / "features.txt", "w") as f:
        for r in feats:
            f.write(" ".join(r) + "\n")
    np.savetxt(args.out / "labels.txt", labels, fmt="%d")

    rng = np.random.default_rng(args.seed)
    train = []
    for c in range(len(classes)):
        members = np.flatnonzero(labels == c)
        train.extend(sorted(rng.choice(members, args.train_per_class, replace=False)))
    rest = np.setdiff1d(np.arange(n), train)
    rng.shuffle(rest)
    val = np.sort(rest[: args.num_val])
    test = np.sort(rest[args.num_val: args.num_val + args.num_test])
    for name, ids in (("train", train), ("val", val), ("test", test)):
        np.savetxt(args.out / f"{name}.txt", np.asarray(ids), fmt="%d")

    print(f"nodes={n} edges={len(edges)} features={len(feats[0])} classes={len(classes)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
