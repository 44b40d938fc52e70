"""Static SVG renderings of campaign and calibration outputs.

Everything reads the CSVs a campaign (or ``advisim calibrate``) wrote; no
simulation happens here.
"""

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_summary(path):
    cols = {"episode": [], "steps_mean": [], "steps_std": [],
            "reward_mean": [], "reward_std": [], "delta_q_mean": [],
            "delta_q_std": []}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            for k in cols:
                v = row[k]
                cols[k].append(float(v) if v != "" else float("nan"))
    return cols


def _arm_dirs(out_dir):
    """(label, summary csv path) per arm, baseline first."""
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    arms = []
    sum_dir = os.path.join(out_dir, "summary")
    if os.path.exists(os.path.join(sum_dir, "baseline.csv")):
        arms.append(("baseline", os.path.join(sum_dir, "baseline.csv")))
    for ratio in manifest["config"]["run"]["ratios"]:
        name = f"ratio_{ratio:.2f}"
        path = os.path.join(sum_dir, f"{name}.csv")
        if os.path.exists(path):
            arms.append((f"{int(round(ratio * 100))}% attackers", path))
    return arms, manifest


def plot_learning_curves(out_dir, plots_dir) -> str:
    arms, _ = _arm_dirs(out_dir)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    for label, path in arms:
        cols = _read_summary(path)
        ep = cols["episode"]
        for ax, mean_k, std_k in ((ax1, "steps_mean", "steps_std"),
                                  (ax2, "reward_mean", "reward_std")):
            m = cols[mean_k]
            s = cols[std_k]
            ax.plot(ep, m, label=label, linewidth=1.2)
            ax.fill_between(ep, [a - b for a, b in zip(m, s)],
                            [a + b for a, b in zip(m, s)], alpha=0.15)
    ax1.set_xlabel("episode")
    ax1.set_ylabel("steps to goal (smoothed)")
    ax2.set_xlabel("episode")
    ax2.set_ylabel("cumulative reward (smoothed)")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(plots_dir, "learning_curves.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_table_drift(out_dir, plots_dir) -> str:
    arms, manifest = _arm_dirs(out_dir)
    threshold = manifest["config"]["metrics"]["convergence_threshold"]
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    drew = False
    for label, path in arms:
        cols = _read_summary(path)
        dq = cols["delta_q_mean"]
        if all(v != v for v in dq):  # all nan: arm had no reference
            continue
        ax.plot(cols["episode"], dq, label=label, linewidth=1.2)
        drew = True
    if drew:
        ax.axhline(threshold, color="gray", linestyle="--", linewidth=0.8,
                   label="convergence threshold")
        ax.set_yscale("log")
    ax.set_xlabel("episode")
    ax.set_ylabel("mean |Q - reference| (smoothed)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(plots_dir, "table_drift.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_degree_histogram(out_dir, plots_dir) -> str:
    """Accepted poisoning degrees, totalled over seeds, one bar group per
    attack arm. Degree 0 (channel injections) is excluded."""
    _, manifest = _arm_dirs(out_dir)
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    width = 0.8 / max(1, len(manifest["config"]["run"]["ratios"]))
    drawn = 0
    for k, ratio in enumerate(manifest["config"]["run"]["ratios"]):
        totals: dict[int, int] = {}
        for arm in manifest["arms"]:
            if arm.get("ratio") != ratio or arm.get("status") != "ok":
                continue
            gpath = os.path.join(out_dir, arm["dir"], "gamma_hist.csv")
            if not os.path.exists(gpath):
                continue
            with open(gpath, newline="") as fh:
                for row in csv.DictReader(fh):
                    d = int(row["degree"])
                    if d > 0:
                        totals[d] = totals.get(d, 0) + int(row["count"])
        if not totals:
            continue
        degrees = sorted(totals)
        ax.bar([d + k * width for d in degrees],
               [totals[d] for d in degrees], width=width,
               label=f"{int(round(ratio * 100))}% attackers")
        drawn += 1
    ax.set_xlabel("accepted poisoning degree")
    ax.set_ylabel("count over campaign")
    if drawn:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(plots_dir, "degree_histogram.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_calibration(calibration_csv, plots_dir) -> str:
    """Outlier counts per arm and distortion growth, from the calibrate
    subcommand's CSV (single- or multi-row)."""
    rows = []
    with open(calibration_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: float(v) for k, v in row.items()})
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    degrees = [r["degree"] for r in rows]
    ax1.plot(degrees, [r["outliers_raw"] for r in rows], "o-",
             label="raw at tau")
    ax1.plot(degrees, [r["outliers_dp"] for r in rows], "s-",
             label="privacy noise at tau*kappa")
    ax1.plot(degrees, [r["outliers_attack"] for r in rows], "^-",
             label="attack at tau*kappa")
    ax1.set_xlabel("poisoning degree")
    ax1.set_ylabel(f"outliers flagged per batch of {int(rows[0]['n'])}")
    ax1.legend(fontsize=8)
    ax2.plot(degrees, [r["rmse"] for r in rows], "o-", color="tab:red")
    ax2.set_xlabel("poisoning degree")
    ax2.set_ylabel("RMSE of attacked values")
    fig.tight_layout()
    path = os.path.join(plots_dir, "calibration.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def render_all(out_dir, calibration_csv=None) -> list[str]:
    plots_dir = os.path.join(out_dir, "plots")
    os.makedirs(plots_dir, exist_ok=True)
    written = [plot_learning_curves(out_dir, plots_dir),
               plot_table_drift(out_dir, plots_dir),
               plot_degree_histogram(out_dir, plots_dir)]
    if calibration_csv and os.path.exists(calibration_csv):
        written.append(plot_calibration(calibration_csv, plots_dir))
    return written
