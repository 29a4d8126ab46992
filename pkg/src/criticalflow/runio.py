"""Trajectory run directories: manifest, snapshot files, diagnostics."""

import json
import os
import subprocess

import numpy as np

from . import __version__
from .snapshot import load_field, save_field
from .states import CnsState, InsState, PressureLaw, Trajectory, ViscosityParams


def code_version():
    """git describe of the working tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=os.path.dirname(__file__),
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"criticalflow-{__version__}"


def save_run(traj, out_dir, system, config_dict, wall_time_s):
    os.makedirs(out_dir, exist_ok=True)
    snapshots = []
    for i, state in enumerate(traj.states):
        entry = {"time": state.t}
        if system == "ins":
            name = f"snap_{i:06d}_v.csv"
            save_field(state.V, os.path.join(out_dir, name), state.t)
            entry["v"] = name
        else:
            name_a = f"snap_{i:06d}_a.csv"
            name_v = f"snap_{i:06d}_v.csv"
            save_field(state.a, os.path.join(out_dir, name_a), state.t)
            save_field(state.v, os.path.join(out_dir, name_v), state.t)
            entry["a"] = name_a
            entry["v"] = name_v
        snapshots.append(entry)
    manifest = {
        "system": system,
        "config": config_dict,
        "code_version": code_version(),
        "wall_time_s": wall_time_s,
        "snapshots": snapshots,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    if traj.diagnostics:
        keys = sorted(traj.diagnostics)
        cols = ["t"] + [k for k in keys if k != "t"]
        data = np.column_stack([np.asarray(traj.diagnostics[k]) for k in cols])
        with open(os.path.join(out_dir, "diagnostics.csv"), "w") as fh:
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def load_run(run_dir):
    """Rebuild a Trajectory from a run directory; returns (traj, manifest)."""
    with open(os.path.join(run_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    system = manifest["system"]
    cfg = manifest["config"]
    states = []
    for entry in manifest["snapshots"]:
        t = entry["time"]
        if system == "ins":
            V, _ = load_field(os.path.join(run_dir, entry["v"]))
            states.append(InsState(t, V, cfg["mu"]))
        else:
            a, _ = load_field(os.path.join(run_dir, entry["a"]))
            v, _ = load_field(os.path.join(run_dir, entry["v"]))
            states.append(
                CnsState(
                    t,
                    a,
                    v,
                    ViscosityParams(cfg["mu"], cfg["lambda"]),
                    PressureLaw(cfg.get("gamma", 2.0)),
                )
            )
    diagnostics = {}
    diag_path = os.path.join(run_dir, "diagnostics.csv")
    if os.path.exists(diag_path):
        with open(diag_path) as fh:
            cols = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        for i, c in enumerate(cols):
            diagnostics[c] = data[:, i]
    return Trajectory(states, diagnostics, meta={"manifest": manifest}), manifest
