#!/usr/bin/env python3
"""End-to-end smoke test of the command-line tool.

Usage: cli_smoke.py /path/to/sdestab

Drives the real binary through every subcommand, checks the documented exit
codes (0 ok, 1 usage, 2 config, 3 failed condition check, 4 runtime), parses
the emitted artifacts, and verifies that reruns are byte-identical.
"""

import json
import os
import struct
import subprocess
import sys
import tempfile
from pathlib import Path

FAILURES = []


def check(cond, msg):
    if not cond:
        FAILURES.append(msg)
        print(f"  FAIL: {msg}")


def run(binary, args, env_extra=None):
    env = os.environ.copy()
    env.pop("SDESTAB_OUT", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([str(binary), *args], capture_output=True,
                          text=True, env=env, timeout=300)


def write_config(root, name, cfg):
    path = Path(root) / name
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return str(path)


def battery_config(seed=3):
    return {
        "family": {"builder": "mollified_jump", "low": 1.0, "high": 2.0,
                   "jump_at": 0.0},
        "n_list": [4, 8, 16, 32],
        "p_list": [1.0],
        "replicas": 50,
        "h": 1.0 / 256,
        "T": 1.0,
        "x0": 0.0,
        "seed": seed,
    }


def main():
    if len(sys.argv) != 2:
        print("usage: cli_smoke.py <sdestab binary>")
        return 2
    binary = Path(sys.argv[1]).resolve()
    check(binary.exists(), f"binary not found: {binary}")
    root = Path(tempfile.mkdtemp(prefix="sdestab_cli_smoke_"))

    print("== usage errors ==")
    check(run(binary, []).returncode == 1, "no subcommand should exit 1")
    check(run(binary, ["frobnicate"]).returncode == 1,
          "unknown subcommand should exit 1")
    check(run(binary, ["yw-table", "--no-such-flag"]).returncode == 1,
          "unknown flag should exit 1")
    check(run(binary, ["--help"]).returncode == 0, "--help should exit 0")

    print("== config errors ==")
    r = run(binary, ["simulate", "--config", str(root / "missing.json")])
    check(r.returncode == 2, "missing config file should exit 2")
    bad = root / "bad.json"
    bad.write_text("{not json")
    check(run(binary, ["simulate", "--config", str(bad)]).returncode == 2,
          "invalid JSON should exit 2")
    noseed = write_config(root, "noseed.json", {
        "family": {"builder": "constant_shift", "sigma0": 1.0}, "n": 4})
    r = run(binary, ["simulate", "--config", noseed,
                     "--out", str(root / "noseed")])
    check(r.returncode == 2, "config without seed should exit 2")
    check("seed" in (r.stderr + r.stdout),
          "missing-seed error should name the field")

    print("== yw-table ==")
    ywcfg = write_config(root, "yw.json", {"m_max": 3, "grid_points": 512})
    out = root / "yw"
    check(run(binary, ["yw-table", "--config", ywcfg,
                       "--out", str(out)]).returncode == 0, "yw-table failed")
    lines = (out / "yw_table.csv").read_text().splitlines()
    check(lines[0] == "m,a_m,mass,envelope_margin,sandwich_margin,uprime_max",
          f"unexpected yw_table header: {lines[0]}")
    check(len(lines) == 4, f"expected 3 data rows, got {len(lines) - 1}")
    for row in lines[1:]:
        cols = row.split(",")
        check(abs(float(cols[2]) - 1.0) <= 1e-8,
              f"mass column off: {cols[2]}")
        check(float(cols[3]) >= 0.0 and float(cols[4]) >= 0.0,
              "envelope/sandwich margins must be non-negative")
        check(float(cols[5]) <= 1.0, "u' bound exceeded")
    manifest = json.loads((out / "manifest.json").read_text())
    check(manifest["subcommand"] == "yw-table", "manifest subcommand echo")
    check("version" in manifest and "started_at" in manifest,
          "manifest must carry version and timestamp")

    print("== condition gate ==")
    okcfg = write_config(root, "cond_ok.json", {
        "family": {"builder": "mollified_jump", "low": 1.0, "high": 2.0,
                   "jump_at": 0.0}, "n_list": [4, 8]})
    r = run(binary, ["check-coefficients", "--config", okcfg,
                     "--out", str(root / "cond_ok")])
    check(r.returncode == 0, "mollified jump family should pass the gate")
    reports = json.loads((root / "cond_ok" / "condition_reports.json")
                         .read_text())
    check(any(rep.get("pass") for rep in reports),
          "passing family must record pass=true")
    stepcfg = write_config(root, "cond_bad.json", {
        "family": {"builder": "step_sigma", "height": 1.0, "lo": 0.0,
                   "hi": 1.0}, "n_list": [4]})
    r = run(binary, ["check-coefficients", "--config", stepcfg,
                     "--out", str(root / "cond_bad")])
    check(r.returncode == 3, "raw step sigma should exit 3")
    reports = json.loads((root / "cond_bad" / "condition_reports.json")
                         .read_text())
    check(any(not rep.get("pass") for rep in reports),
          "failing family must record pass=false")

    print("== simulate + noise dump ==")
    simcfg = write_config(root, "sim.json", {
        "family": {"builder": "constant_shift", "sigma0": 1.0},
        "n": 4, "h": 1.0 / 64, "T": 1.0, "x0": 0.0, "seed": 5})
    out = root / "sim"
    r = run(binary, ["simulate", "--config", simcfg, "--out", str(out),
                     "--dump-noise", "--seed", "31"])
    check(r.returncode == 0, f"simulate failed: {r.stderr}")
    lines = (out / "path.csv").read_text().splitlines()
    check(lines[0] == "t,x,xn,y", "path.csv header")
    check(len(lines) == 66, f"expected 65 grid rows, got {len(lines) - 1}")
    manifest = json.loads((out / "manifest.json").read_text())
    check(manifest["seed"] == 31, "--seed must override the config seed")
    blob = (out / "noise.bin").read_bytes()
    check(len(blob) == 32 + 64 * 8, f"noise.bin size {len(blob)}")
    magic, driver, alpha, h, steps, seed = struct.unpack_from("<8sIffIQ",
                                                              blob)
    check(magic == b"SDESTAB1", f"noise magic {magic!r}")
    check(driver == 0 and alpha == 0.0, "wiener dump tags")
    check(h == struct.unpack("<f", struct.pack("<f", 1.0 / 64))[0],
          "header h roundtrip")
    check(steps == 64 and seed == 31, "header steps/seed")
    # without --dump-noise no binary stream is written
    out2 = root / "sim_nodump"
    run(binary, ["simulate", "--config", simcfg, "--out", str(out2)])
    check(not (out2 / "noise.bin").exists(), "noise.bin written unasked")

    print("== stability battery + determinism ==")
    batcfg = write_config(root, "battery.json", battery_config())
    out_a, out_b = root / "bat_a", root / "bat_b"
    for out in (out_a, out_b):
        r = run(binary, ["stability-rate", "--config", batcfg,
                         "--out", str(out), "--threads", "2"])
        check(r.returncode == 0, f"stability-rate failed: {r.stderr}")
    artifacts = ["errors_p1.csv", "errors_p1_halfstep.csv", "summary_p1.json",
                 "plot_p1.csv", "halving_p1.json"]
    for name in artifacts:
        check((out_a / name).exists(), f"{name} missing")
        check((out_a / name).read_bytes() == (out_b / name).read_bytes(),
              f"{name} differs between identical reruns")
    summary = json.loads((out_a / "summary_p1.json").read_text())
    check(summary["p"] == 1.0, "summary p echo")
    check(len(summary["errors"]) == 4, "summary must list 4 error rows")
    check(summary["verdict"]["q_claimed"] == 0.5,
          "terminal battery claims q=1/2")

    print("== report re-emission ==")
    repcfg = write_config(root, "report.json", {
        "input": str(out_a / "errors_p1.csv"), "q_claimed": 0.5})
    out = root / "report"
    r = run(binary, ["report", "--config", repcfg, "--out", str(out)])
    check(r.returncode == 0, f"report failed: {r.stderr}")
    reemitted = json.loads((out / "summary_reemitted.json").read_text())
    check(len(reemitted["errors"]) == 4, "re-emitted error rows")
    check(reemitted["seed"] == 3, "seed recovered from the CSV")

    print("== stable-rate ==")
    stcfg = battery_config()
    stcfg.update({"driver": "STABLE", "alpha": 1.5, "h": 1.0 / 128,
                  "n_list": [4, 8]})
    stcfg = write_config(root, "stable.json", stcfg)
    out = root / "stable"
    r = run(binary, ["stable-rate", "--config", stcfg, "--out", str(out)])
    check(r.returncode == 0, f"stable-rate failed: {r.stderr}")
    summary = json.loads((out / "summary_alpha1_5.json").read_text())
    check(summary["driver"] == "STABLE", "stable summary driver tag")
    check(summary["p"] == 0.5, "stable battery reports the alpha-1 moment")
    # the stable driver is rejected where only the wiener theory applies
    r = run(binary, ["stability-rate", "--config", stcfg,
                     "--out", str(root / "stable_reject")])
    check(r.returncode == 2, "stability-rate must reject the STABLE driver")

    print("== drift removal ==")
    drcfg_body = {
        "family": {"builder": "mollified_jump", "low": 1.0, "high": 2.0,
                   "jump_at": 0.0},
        "drift": {"builder": "step", "height": 0.5, "lo": 0.0, "hi": 1.0},
        "n_list": [4, 8, 16, 32],
        "h_exp_min": 6, "h_exp_max": 8,
        "replicas": 30, "seed": 9, "x0": 0.5, "T": 1.0,
    }
    drcfg = write_config(root, "dr.json", drcfg_body)
    out = root / "dr"
    r = run(binary, ["drift-removal", "--config", drcfg, "--out", str(out)])
    check(r.returncode == 0, f"drift-removal failed: {r.stderr}")
    lines = (out / "roundtrip.csv").read_text().splitlines()
    check(len(lines) == 4, f"expected 3 roundtrip rows, got {len(lines) - 1}")
    summary = json.loads((out / "drift_removal_summary.json").read_text())
    check(summary["lemma"]["pass"] is True, "invariance checks must pass")
    check("corollary_fit" in summary, "summary must carry the distance fit")
    check((out / "transformed_distance.csv").exists(),
          "transformed_distance.csv missing")
    # runtime failure: table box that excludes the base point
    drbad = dict(drcfg_body)
    drbad.update({"box_lo": 5.0, "box_hi": 6.0})
    drbad = write_config(root, "dr_bad.json", drbad)
    r = run(binary, ["drift-removal", "--config", drbad,
                     "--out", str(root / "dr_bad")])
    check(r.returncode == 4, f"bad table box should exit 4, got "
          f"{r.returncode}")

    print("== SDESTAB_OUT fallback ==")
    envout = root / "envout"
    r = run(binary, ["yw-table", "--config", ywcfg],
            env_extra={"SDESTAB_OUT": str(envout)})
    check(r.returncode == 0, "yw-table with env output failed")
    check((envout / "yw_table.csv").exists(),
          "SDESTAB_OUT must supply the default output directory")

    print()
    if FAILURES:
        print(f"cli smoke: {len(FAILURES)} failure(s)")
        return 1
    print("cli smoke: all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
