#!/usr/bin/env python3
"""End-to-end checks of the command-line front door."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

BIN = sys.argv[1]


def run(*args, **kw):
    return subprocess.run([BIN, *args], capture_output=True, text=True, **kw)


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def main():
    tmp = Path(tempfile.mkdtemp(prefix="bblab_cli_"))
    failures = []

    def check(name, cond):
        print(f"{'ok' if cond else 'FAIL'}  {name}")
        if not cond:
            failures.append(name)

    r = run("--help")
    check("help exits 0", r.returncode == 0)

    r = run()
    check("missing subcommand is a usage error", r.returncode == 2)

    bad = tmp / "bad.json"
    bad.write_text("{ not json")
    r = run("simulate", "--config", str(bad), "--out", str(tmp / "o0"))
    check("malformed config exits 2", r.returncode == 2)

    r = run("verify", "--suite", "nope", "--out", str(tmp / "o1"))
    check("unknown suite exits 2", r.returncode == 2)

    # simulate: deterministic transport, boundary start -> all tau = 0.
    sim_cfg = {
        "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
        "coefficients": {"family": "constant_drift", "v": [1.0], "sigma_scale": 0.0},
        "solver": {"dt": 0.01, "n_paths": 5, "seed": 1, "start": [0.0], "t_max": 2.0},
        "outputs": {"prefix": "t"},
    }
    cfg_path = write(tmp / "sim.json", sim_cfg)
    out1 = tmp / "sim1"
    r = run("simulate", "--config", cfg_path, "--out", str(out1))
    check("simulate exits 0", r.returncode == 0)
    csv = (out1 / "t_batch.csv").read_text().splitlines()
    check("simulate row count", len(csv) == 6)
    check("boundary start exits at once", all(row.split(",")[1] == "0" for row in csv[1:]))
    manifest = json.loads((out1 / "t_manifest.json").read_text())
    check("manifest lists the csv", manifest["outputs"] == ["t_batch.csv"])

    out2 = tmp / "sim2"
    run("simulate", "--config", cfg_path, "--out", str(out2))
    check(
        "rerun is byte-identical",
        (out1 / "t_batch.csv").read_bytes() == (out2 / "t_batch.csv").read_bytes(),
    )

    # solve-pde: linear sanity, plus an unknown key that only warns.
    pde_cfg = {
        "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
        "coefficients": {"family": "brownian"},
        "generator": {"kind": "power", "q": 1.0, "kappa": 0.0},
        "boundary": {"left": 0.0, "right": 1.0},
        "solver": {"grid_cells": [32], "truncation_n": 2.0},
        "outputs": {"prefix": "lin"},
        "zzz_unknown": 1,
    }
    out3 = tmp / "pde"
    r = run("solve-pde", "--config", write(tmp / "pde.json", pde_cfg), "--out", str(out3),
            "--emit-plots")
    check("solve-pde exits 0 with unknown keys", r.returncode == 0)
    check("unknown key warns", "unknown key" in r.stderr)
    rows = (out3 / "lin_field.csv").read_text().splitlines()[1:]
    affine = all(
        abs(float(row.split(",")[1]) - float(row.split(",")[0])) < 1e-10 for row in rows
    )
    check("linear sanity field is affine", affine)
    check("plot script emitted", (out3 / "lin_plot.gp").exists())

    # solve-bsde in pure-ODE mode: y0 close to 2/3.
    ode_cfg = {
        "generator": {"kind": "power", "q": 1.0, "kappa": 1.0},
        "solver": {"mode": "pure_ode", "xi": 2.0, "horizon": 1.0, "dt": 0.001, "seed": 1},
        "outputs": {"prefix": "ode"},
    }
    out4 = tmp / "ode"
    r = run("solve-bsde", "--config", write(tmp / "ode.json", ode_cfg), "--out", str(out4))
    check("solve-bsde exits 0", r.returncode == 0)
    run_json = json.loads((out4 / "ode_run.json").read_text())
    check("pure-ODE y0 near 2/3", abs(run_json["y0_mean"] - 2.0 / 3.0) <= 0.01)

    # sweep: 2 x 2 Cartesian product.
    sweep_cfg = dict(ode_cfg)
    sweep_cfg["sweep"] = {
        "command": "solve-bsde",
        "parameters": {"solver.dt": [0.004, 0.002], "solver.xi": [1.0, 2.0]},
    }
    out5 = tmp / "sweep"
    r = run("sweep", "--config", write(tmp / "sweep.json", sweep_cfg), "--out", str(out5))
    check("sweep exits 0", r.returncode == 0)
    combos = sorted(p.name for p in out5.iterdir() if p.is_dir())
    check("sweep produces 4 combos", combos == [f"sweep_{i:03d}" for i in range(4)])
    check("sweep combo has run output", (out5 / "sweep_000" / "ode_run.json").exists())

    if failures:
        print("FAILED:", ", ".join(failures))
        return 1
    print("all CLI checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
