"""Backend benchmark: the same workload on both execution paths.

``run_bench`` times one arm in-process under whatever backend this process
imported. ``compare_backends`` spawns one subprocess per backend (the flag
is read at import time, so a fresh interpreter is required), parses their
reports, and checks the two backends produced identical results.
"""

import hashlib
import os
import re
import subprocess
import sys
import time

from .accel import backend_name
from .config import ExperimentConfig


def run_bench(scale: str, episodes: int, seed: int, ratio: float) -> dict:
    from .harness import run_arm

    cfg = ExperimentConfig()
    cfg.env.scale = scale
    cfg.run.episodes = episodes
    cfg.run.seeds = [seed]
    cfg.run.ratios = [ratio]
    cfg.validate()
    # warm pass compiles the kernels so the timing measures steady state
    warm = ExperimentConfig()
    warm.env.scale = "small"
    warm.run.episodes = 2
    run_arm(warm, seed, ratio=ratio, dp=True)
    t0 = time.perf_counter()
    result = run_arm(cfg, seed, ratio=ratio, dp=True)
    wall = time.perf_counter() - t0
    digest = hashlib.sha256()
    for e in result.episodes:
        digest.update(f"{e.steps},{repr(e.reward)};".encode())
    digest.update(result.q_final.tobytes())
    return {"backend": backend_name(), "episodes": episodes, "wall": wall,
            "eps_per_s": episodes / wall if wall > 0 else float("inf"),
            "digest": digest.hexdigest()[:16]}


def compare_backends(args) -> int:
    reports = {}
    for flag, label in (("1", "numba"), ("0", "python")):
        env = dict(os.environ, ADVISIM_NUMBA=flag)
        cmd = [sys.executable, "-m", "advisim.cli", "bench",
               "--scale", args.scale, "--episodes", str(args.episodes),
               "--seed", str(args.seed), "--ratio", str(args.ratio)]
        print(f"[{label}] running {args.episodes} episodes "
              f"({args.scale} scale)...", flush=True)
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(proc.stdout)
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        m = re.search(r"BENCH backend=(\S+) episodes=(\d+) wall=([\d.]+)s "
                      r"eps_per_s=([\d.]+) digest=(\S+)", proc.stdout)
        if not m:
            print(proc.stdout)
            print("could not parse bench report", file=sys.stderr)
            return 1
        reports[label] = {"backend": m.group(1), "wall": float(m.group(3)),
                          "eps_per_s": float(m.group(4)),
                          "digest": m.group(5)}
        print(f"[{label}] {reports[label]['wall']:.3f}s "
              f"({reports[label]['eps_per_s']:.1f} episodes/s)")
    speedup = reports["python"]["wall"] / reports["numba"]["wall"]
    same = reports["python"]["digest"] == reports["numba"]["digest"]
    print(f"speedup: {speedup:.1f}x; results identical: {'yes' if same else 'NO'}")
    if not same:
        print("backends disagreed; this breaks the fallback contract",
              file=sys.stderr)
        return 2
    return 0
