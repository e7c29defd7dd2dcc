"""Grid search over step size and radius for the learning controllers.

Runs control-bench on a tuning seed and writes a config with the best
(eta, radius) per controller per experiment, judged by the final-window
mean loss. Candidates with any failed trial are discarded.

    python tools/tune_benchmark.py --bench build/control-bench \
        --base configs/benchmark_base.json --out configs/benchmark.json
"""

import argparse
import copy
import csv
import itertools
import json
import subprocess
import tempfile
from pathlib import Path

GRIDS = {
    "grc": {"eta": [3e-7, 7e-7, 1.5e-6, 3e-6, 6e-6], "radius": [0.01, 0.03, 0.1, 1.0, 10.0]},
    "dsc": {"eta": [3e-8, 7e-8, 1.5e-7, 3e-7, 6e-7], "radius": [0.01, 0.03, 0.1, 1.0, 10.0]},
}


def final_means(out_dir, manifest):
    result = {}
    for entry in manifest["experiments"]:
        failed = {f["controller"] for f in entry["failures"]}
        last = {}
        with open(Path(out_dir) / entry["csv"], newline="") as fh:
            for row in csv.DictReader(fh):
                last[row["controller"]] = float(row["mean"])
        if entry["failures"]:
            # a failed trial aborts every controller of that trial
            failed = set(last)
        result[entry["config"]["name"]] = {k: (float("inf") if k in failed else v) for k, v in last.items()}
    return result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bench", required=True)
    ap.add_argument("--base", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--tune-seed", type=int, default=7)
    ap.add_argument("--tune-trials", type=int, default=40)
    args = ap.parse_args()

    base = json.loads(Path(args.base).read_text())
    defaults = base["defaults"]
    tuned = copy.deepcopy(base)

    for exp_index, exp in enumerate(base["experiments"]):
        best_per_label = {}
        for spec in defaults["controllers"]:
            grid = GRIDS.get(spec["type"])
            if grid is None:
                continue
            candidates = []
            for eta, radius in itertools.product(grid["eta"], grid["radius"]):
                c = dict(spec, eta=eta, radius=radius, label=f"{spec['label']}|{eta:g}|{radius:g}")
                candidates.append((c["label"], eta, radius, c))
            trial = copy.deepcopy(exp)
            trial["controllers"] = [c for _, _, _, c in candidates]
            trial["name"] = f"tune_{exp_index}_{spec['label']}"
            doc = {"defaults": defaults, "experiments": [trial]}
            with tempfile.TemporaryDirectory() as tmp:
                cfg = Path(tmp) / "tune.json"
                cfg.write_text(json.dumps(doc))
                subprocess.run([args.bench, "run", "--config", str(cfg), "--out", tmp,
                                "--trials", str(args.tune_trials), "--seed", str(args.tune_seed)],
                               check=True, stdout=subprocess.DEVNULL)
                manifest = json.loads((Path(tmp) / "manifest.json").read_text())
                scores = final_means(tmp, manifest)[trial["name"]]
            label, eta, radius, _ = min(candidates, key=lambda c: scores[c[0]])
            best_per_label[spec["label"]] = {"eta": eta, "radius": radius}
            print(f"{exp.get('name')}: {spec['label']} eta={eta:g} radius={radius:g} "
                  f"final-window mean {scores[label]:.4f}")
        controllers = []
        for spec in defaults["controllers"]:
            controllers.append(dict(spec, **best_per_label.get(spec["label"], {})))
        tuned["experiments"][exp_index]["controllers"] = controllers

    Path(args.out).write_text(json.dumps(tuned, indent=2) + "\n")


if __name__ == "__main__":
    main()
