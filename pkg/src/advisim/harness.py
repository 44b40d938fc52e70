"""Reproducible experiment harness.

A campaign crosses seeds with attacker ratios. Per seed it first runs the
baseline arm (privacy off, no attackers) whose final tables become the
drift reference, then one arm per ratio with privacy on. All arms at the
same seed derive identical random streams, so the environment, placements
and benign draws match across arms and differences are attributable to the
treatment; arms never share mutable state and can run in any order.

Every arm writes its own CSVs; the campaign manifest records the resolved
configuration, derived constants and a SHA-256 per output file, which is
what ``advisim replay`` re-verifies.
"""

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, attack, grid, kernels, metrics, rng
from .accel import backend_name
from .advice import AdviceParams
from .config import ConfigError, ExperimentConfig, from_dict
from .detector import DetectorParams
from .learner import LearnerParams
from .metrics import EpisodeMetrics
from .privacy import PrivacyParams

ACCEPT_NAMES = {kernels.ACCEPT_CAP: "degree-cap",
                kernels.ACCEPT_QCOND: "q-condition",
                kernels.ACCEPT_EXTERNAL: "external"}


def pack_config(*, height: int, width: int, goal: tuple[int, int],
                step_limit: int, n_agents: int, advice: bool, dp: bool,
                obstacle_hop: bool = False, obstacle_block: bool = False,
                privacy: PrivacyParams, advice_params: AdviceParams,
                learner: LearnerParams | None = None,
                detector: DetectorParams | None = None,
                attack_mode: str = "none", sampler: str = "shifted-laplace",
                degree_cap: int = 12, theta: float = 0.0,
                external_degree: float = 4.0, blind: bool = False,
                attacker_random_walk: bool = False, attacker_eps: float = 1.0,
                attacker_avoid_radius: int = 0,
                rewards: tuple = (grid.REWARD_GOAL, grid.REWARD_FREEWAY,
                                  grid.REWARD_OBSTACLE, grid.REWARD_WALL),
                attack_log: bool = False, advice_log: bool = False,
                alarm_log_all: bool = False):
    """Flatten the parameter objects into the kernel's (ci, cf) arrays and
    build the per-degree (c, mu) lookup tables."""
    learner = learner or LearnerParams()
    detector = detector or DetectorParams()
    mode_code = {"none": 0, "internal": 1, "external": 2}[attack_mode]
    ci = np.zeros(kernels.CI_SLOTS, dtype=np.int64)
    cf = np.zeros(kernels.CF_SLOTS, dtype=np.float64)
    ci[kernels.CI_HEIGHT] = height
    ci[kernels.CI_WIDTH] = width
    ci[kernels.CI_GOALX] = goal[0]
    ci[kernels.CI_GOALY] = goal[1]
    ci[kernels.CI_STEPLIM] = step_limit
    ci[kernels.CI_NAGENTS] = n_agents
    ci[kernels.CI_ADVICE] = 1 if advice else 0
    ci[kernels.CI_DP] = 1 if dp else 0
    ci[kernels.CI_ATTACKMODE] = mode_code
    ci[kernels.CI_TILTED] = 1 if sampler == "tilted" else 0
    ci[kernels.CI_DEGCAP] = degree_cap
    ci[kernels.CI_BLIND] = 1 if blind else 0
    ci[kernels.CI_BLOCKING] = 1 if detector.blocking else 0
    ci[kernels.CI_ZONE] = advice_params.zone_radius
    ci[kernels.CI_OBSHOP] = 1 if obstacle_hop else 0
    ci[kernels.CI_OBSBLOCK] = 1 if obstacle_block else 0
    ci[kernels.CI_ATTRANDOM] = 1 if attacker_random_walk else 0
    ci[kernels.CI_ATTAVOID] = attacker_avoid_radius
    ci[kernels.CI_ALARMLOGALL] = 1 if alarm_log_all else 0
    ci[kernels.CI_ADVICELOG] = 1 if advice_log else 0
    ci[kernels.CI_ATTACKLOG] = 1 if attack_log else 0
    ci[kernels.CI_POLBASE] = rng.policy_base(n_agents)
    ci[kernels.CI_PRIVBASE] = rng.privacy_base(n_agents)
    ci[kernels.CI_ATTBASE] = rng.attack_base(n_agents)
    ci[kernels.CI_PROTOBASE] = rng.protocol_base(n_agents)
    cf[kernels.CF_PHI_GOAL] = rewards[0]
    cf[kernels.CF_PHI_FREE] = rewards[1]
    cf[kernels.CF_PHI_OBST] = rewards[2]
    cf[kernels.CF_PHI_WALL] = rewards[3]
    cf[kernels.CF_ALPHA] = learner.alpha
    cf[kernels.CF_GAMMA] = learner.gamma
    cf[kernels.CF_EPS] = learner.epsilon
    cf[kernels.CF_W] = advice_params.weight
    cf[kernels.CF_LO] = privacy.lower
    cf[kernels.CF_UP] = privacy.upper
    cf[kernels.CF_SCALE] = privacy.scale
    cf[kernels.CF_TAU] = detector.tau
    cf[kernels.CF_KAPPA] = detector.kappa
    cf[kernels.CF_THETA] = theta
    cf[kernels.CF_ATT_EPS] = attacker_eps
    cf[kernels.CF_ASK_EXP] = advice_params.ask_exponent
    cf[kernels.CF_GIVE_EXP] = advice_params.give_exponent
    c_tab, mu_tab = attack.degree_tables(privacy, degree_cap, theta)
    if attack_mode == "external":
        profile = attack.make_profile(external_degree, privacy, theta, sampler)
        cf[kernels.CF_EXT_C] = profile.c
        cf[kernels.CF_EXT_MU] = profile.mu
    else:
        cf[kernels.CF_EXT_C] = c_tab[0]
        cf[kernels.CF_EXT_MU] = mu_tab[0]
    return ci, cf, c_tab, mu_tab


@dataclass
class ArmResult:
    kind: str  # "baseline" or "ratio"
    seed: int
    ratio: float
    attacker_ids: list[int]
    episodes: list[EpisodeMetrics]
    gamma: np.ndarray  # (episodes, degree_cap + 2) accepted-degree counts
    q_final: np.ndarray  # (agents, states, actions)
    attack_log: tuple[np.ndarray, np.ndarray] | None = None
    alarm_log: tuple[np.ndarray, np.ndarray] | None = None
    advice_log: tuple[np.ndarray, np.ndarray] | None = None
    truncated: list[str] = field(default_factory=list)


def select_attackers(n_agents: int, ratio: float, states: np.ndarray) -> list[int]:
    """First ceil(ratio * n) ids of a seeded shuffle drawn from the setup
    stream. The shuffle always runs, so stream consumption is identical
    across ratios at the same seed."""
    perm = list(range(n_agents))
    for i in range(n_agents - 1, 0, -1):
        j = int(rng.next_below(states, rng.SETUP_STREAM, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:math.ceil(ratio * n_agents)]


def run_arm(cfg: ExperimentConfig, seed: int, *, ratio: float = 0.0,
            dp: bool = True, advice_enabled: bool | None = None,
            reference: np.ndarray | None = None,
            kind: str = "ratio") -> ArmResult:
    """One full run at a fixed seed and attacker ratio.

    ``reference`` (a stacked (agents, states, actions) array) turns on the
    per-episode mean-absolute-drift metric. All mutable state is local, so
    concurrent or reordered arm runs cannot interact.
    """
    cfg.validate()
    h, w, n, n_obst, n_free, goal = cfg.env.resolved()
    n_actions = grid.N_ACTIONS
    n_states = h * w
    episodes = cfg.episodes
    if advice_enabled is None:
        advice_enabled = cfg.advice.enabled
    privacy = cfg.privacy.params(cfg.learner.alpha)
    advice_params = cfg.advice.params()
    detector = cfg.detector.params()

    states = rng.derive_streams(rng.root_from_seed(seed), rng.stream_count(n))
    freeways = np.zeros((n_free, 2), dtype=np.int64)
    cell_free = np.zeros(n_states, dtype=np.uint8)
    kernels.place_freeways(h, w, goal[0], goal[1], freeways, cell_free, states)
    attacker_ids = select_attackers(n, ratio, states)
    attacker_flags = np.zeros(n, dtype=np.uint8)
    attacker_flags[attacker_ids] = 1

    mode = cfg.attack.mode if attacker_ids else "none"
    ci, cf, c_tab, mu_tab = pack_config(
        height=h, width=w, goal=goal, step_limit=cfg.env.step_limit,
        obstacle_hop=cfg.env.obstacle_hop,
        obstacle_block=cfg.env.obstacle_block,
        n_agents=n, advice=advice_enabled, dp=dp, privacy=privacy,
        advice_params=advice_params, learner=cfg.learner, detector=detector,
        attack_mode=mode, sampler=cfg.attack.sampler,
        degree_cap=cfg.attack.degree_cap, theta=cfg.attack.theta,
        external_degree=cfg.attack.external_degree, blind=cfg.attack.blind,
        attacker_random_walk=cfg.attack.random_walk,
        attacker_eps=cfg.attack.epsilon,
        attacker_avoid_radius=cfg.attack.avoid_radius,
        attack_log=cfg.run.attack_log and bool(attacker_ids),
        advice_log=cfg.run.advice_log,
        alarm_log_all=cfg.detector.log_all)

    obstacles = np.zeros((n_obst, 2), dtype=np.int64)
    cell_obst = np.zeros(n_states, dtype=np.int64)
    pos = np.zeros((n, 2), dtype=np.int64)
    q = np.zeros((n, n_states, n_actions))
    visit = np.zeros((n, n_states), dtype=np.int64)
    visit_life = np.zeros((n, n_states), dtype=np.int64)
    ask_budget = np.full(n, advice_params.ask_budget, dtype=np.int64)
    give_budget = np.full(n, advice_params.give_budget, dtype=np.int64)
    for a_id in attacker_ids:
        give_budget[a_id] = cfg.attack.give_budget
    q0_mean = np.zeros((n, n_states, n_actions))
    q0_count = np.zeros((n, n_states, n_actions), dtype=np.int64)

    cap = cfg.run.log_cap
    att_i = np.zeros((cap if ci[kernels.CI_ATTACKLOG] else 1, 6), dtype=np.int64)
    att_f = np.zeros((att_i.shape[0], 2))
    adv_i = np.zeros((cap if ci[kernels.CI_ADVICELOG] else 1, 7), dtype=np.int64)
    adv_f = np.zeros((adv_i.shape[0], 1))
    alm_i = np.zeros((cap, 6), dtype=np.int64)
    alm_f = np.zeros((cap, 2))
    att_cur = np.zeros(1, dtype=np.int64)
    adv_cur = np.zeros(1, dtype=np.int64)
    alm_cur = np.zeros(1, dtype=np.int64)

    cum_reward = np.zeros(n)
    sc_vec = np.zeros((n, n_actions))
    sc_adv = np.zeros(n, dtype=np.int64)
    sc_mal = np.zeros(n, dtype=np.int64)
    sc_deg = np.zeros(n, dtype=np.int64)
    sc_by = np.zeros(n, dtype=np.int64)
    sc_sum = np.zeros(n_actions)
    gamma = np.zeros((episodes, cfg.attack.degree_cap + 2), dtype=np.int64)

    out: list[EpisodeMetrics] = []
    for ep in range(episodes):
        kernels.reset_entities(h, w, goal[0], goal[1], obstacles, cell_obst,
                               pos, states)
        steps, winner, phi, alarms, asks, responses = kernels.run_episode(
            ci, cf, ep, obstacles, cell_obst, cell_free, pos, q, visit,
            visit_life, ask_budget, give_budget, attacker_flags, c_tab, mu_tab,
            q0_mean, q0_count, states, gamma[ep],
            att_i, att_f, att_cur, adv_i, adv_f, adv_cur,
            alm_i, alm_f, alm_cur, cum_reward,
            sc_vec, sc_adv, sc_mal, sc_deg, sc_by, sc_sum)
        dq = (metrics.delta_q(q, reference) if reference is not None
              else float("nan"))
        out.append(EpisodeMetrics(
            episode=ep, steps=int(steps), reward=float(phi), delta_q=dq,
            alarms=int(alarms), winner=int(winner), asks=int(asks),
            responses=int(responses), gamma_counts=gamma[ep]))

    truncated = []
    for name, cur, arr, flag in (("attack", att_cur, att_i, ci[kernels.CI_ATTACKLOG]),
                                 ("advice", adv_cur, adv_i, ci[kernels.CI_ADVICELOG]),
                                 ("alarm", alm_cur, alm_i, 1)):
        if flag and cur[0] >= arr.shape[0]:
            truncated.append(name)
    return ArmResult(
        kind=kind, seed=seed, ratio=ratio, attacker_ids=attacker_ids,
        episodes=out, gamma=gamma, q_final=q,
        attack_log=((att_i[:att_cur[0]].copy(), att_f[:att_cur[0]].copy())
                    if ci[kernels.CI_ATTACKLOG] else None),
        alarm_log=(alm_i[:alm_cur[0]].copy(), alm_f[:alm_cur[0]].copy()),
        advice_log=((adv_i[:adv_cur[0]].copy(), adv_f[:adv_cur[0]].copy())
                    if ci[kernels.CI_ADVICELOG] else None),
        truncated=truncated)


# ---------------------------------------------------------------------------
# per-arm output files
# ---------------------------------------------------------------------------


def write_qtables_csv(path, q: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["agent", "state", "action", "q"])
        for i in range(q.shape[0]):
            for s in range(q.shape[1]):
                for a in range(q.shape[2]):
                    wr.writerow([i, s, a, repr(float(q[i, s, a]))])


def write_attack_csv(path, log: tuple[np.ndarray, np.ndarray]) -> None:
    ints, floats = log
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["episode", "step", "attacker", "state", "degree",
                     "accepted_by", "mu", "c"])
        for r in range(ints.shape[0]):
            wr.writerow([ints[r, 0], ints[r, 1], ints[r, 2], ints[r, 3],
                         ints[r, 4], ACCEPT_NAMES[int(ints[r, 5])],
                         repr(float(floats[r, 0])), repr(float(floats[r, 1]))])


def write_alarm_csv(path, log: tuple[np.ndarray, np.ndarray]) -> None:
    ints, floats = log
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["episode", "step", "advisee", "advisor", "state",
                     "verdict", "max_deviation", "threshold"])
        for r in range(ints.shape[0]):
            wr.writerow([ints[r, 0], ints[r, 1], ints[r, 2], ints[r, 3],
                         ints[r, 4], "alarm" if ints[r, 5] else "accept",
                         repr(float(floats[r, 0])), repr(float(floats[r, 1]))])


def write_advice_csv(path, log: tuple[np.ndarray, np.ndarray]) -> None:
    ints, floats = log
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["episode", "step", "advisee", "advisor", "state",
                     "action", "malicious", "value"])
        for r in range(ints.shape[0]):
            wr.writerow([ints[r, 0], ints[r, 1], ints[r, 2], ints[r, 3],
                         ints[r, 4], ints[r, 5], ints[r, 6],
                         repr(float(floats[r, 0]))])


def write_arm_outputs(arm_dir: str, result: ArmResult) -> list[str]:
    """Write one arm's files; returns their paths relative to ``arm_dir``'s
    parent campaign directory is the caller's concern, so paths here are
    absolute within arm_dir."""
    os.makedirs(arm_dir, exist_ok=True)
    written = []

    def _out(name):
        written.append(os.path.join(arm_dir, name))
        return written[-1]

    metrics.write_episodes_csv(_out("episodes.csv"), result.episodes)
    write_qtables_csv(_out("qtables.csv"), result.q_final)
    metrics.write_gamma_csv(_out("gamma_hist.csv"), result.gamma)
    if result.attack_log is not None:
        write_attack_csv(_out("attack_log.csv"), result.attack_log)
    write_alarm_csv(_out("alarm_log.csv"), result.alarm_log)
    if result.advice_log is not None:
        write_advice_csv(_out("advice_log.csv"), result.advice_log)
    return written


# ---------------------------------------------------------------------------
# campaign
# ---------------------------------------------------------------------------


def _ratio_dir(ratio: float) -> str:
    return f"ratio_{ratio:.2f}"


def derived_constants(cfg: ExperimentConfig) -> dict:
    h, w, n, o, f, goal = cfg.env.resolved()
    privacy = cfg.privacy.params(cfg.learner.alpha)
    detector = cfg.detector.params()
    return {
        "grid": [h, w], "agents": n, "obstacles": o, "freeways": f,
        "goal": list(goal), "episodes": cfg.episodes,
        "noise_scale": privacy.scale, "sensitivity": privacy.sensitivity,
        "tau_prime": detector.tau_prime,
        "poisoning_window": detector.poisoning_window(),
    }


def run_campaign(cfg: ExperimentConfig, out_dir: str,
                 progress=None) -> tuple[dict, list[str]]:
    """Run baseline plus one arm per ratio for every seed, write all CSVs,
    summaries and the manifest. Returns (manifest, failures); a failed arm
    is recorded and skipped, not fatal to its siblings."""
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    window = cfg.metrics.smoothing_window
    arms_meta: list[dict] = []
    outputs: list[str] = []
    failures: list[str] = []
    summaries: dict[tuple, metrics.RunSummary] = {}

    def _note(msg):
        if progress:
            progress(msg)

    for seed in cfg.run.seeds:
        reference = None
        if cfg.run.baseline:
            label = f"baseline seed {seed}"
            _note(label)
            try:
                res = run_arm(cfg, seed, ratio=0.0, dp=False, kind="baseline")
                reference = res.q_final
                arm_dir = os.path.join(out_dir, "baseline", f"seed_{seed}")
                outputs.extend(write_arm_outputs(arm_dir, res))
                summaries[("baseline", seed)] = metrics.summarize_run(
                    res.episodes, window, cfg.metrics.convergence_threshold,
                    cfg.metrics.persistence)
                arms_meta.append({
                    "kind": "baseline", "seed": seed, "ratio": None,
                    "dir": f"baseline/seed_{seed}", "attackers": [],
                    "truncated": res.truncated, "status": "ok"})
            except Exception as e:  # keep the campaign alive
                failures.append(f"{label}: {e}")
                arms_meta.append({"kind": "baseline", "seed": seed,
                                  "ratio": None, "status": f"failed: {e}"})
        for ratio in cfg.run.ratios:
            label = f"ratio {ratio:.2f} seed {seed}"
            _note(label)
            try:
                res = run_arm(cfg, seed, ratio=ratio,
                              dp=cfg.privacy.enabled, reference=reference)
                arm_dir = os.path.join(out_dir, _ratio_dir(ratio),
                                       f"seed_{seed}")
                outputs.extend(write_arm_outputs(arm_dir, res))
                summaries[(ratio, seed)] = metrics.summarize_run(
                    res.episodes, window, cfg.metrics.convergence_threshold,
                    cfg.metrics.persistence)
                arms_meta.append({
                    "kind": "ratio", "seed": seed, "ratio": ratio,
                    "dir": f"{_ratio_dir(ratio)}/seed_{seed}",
                    "attackers": res.attacker_ids,
                    "truncated": res.truncated, "status": "ok"})
            except Exception as e:
                failures.append(f"{label}: {e}")
                arms_meta.append({"kind": "ratio", "seed": seed,
                                  "ratio": ratio, "status": f"failed: {e}"})

    outputs.extend(_write_summaries(cfg, out_dir, summaries))
    manifest = {
        "format": 1,
        "tool": {"name": "advisim", "version": __version__,
                 "backend": backend_name()},
        "config": cfg.to_dict(),
        "derived": derived_constants(cfg),
        "arms": arms_meta,
        "outputs": {os.path.relpath(p, out_dir): sha256_file(p)
                    for p in sorted(outputs)},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest, failures


def _write_summaries(cfg: ExperimentConfig, out_dir: str,
                     summaries: dict) -> list[str]:
    """Aggregate per-seed summaries into per-arm CSVs. Smoothing happens
    per seed before the cross-seed mean/std."""
    sum_dir = os.path.join(out_dir, "summary")
    os.makedirs(sum_dir, exist_ok=True)
    written = []
    arms: list[tuple] = []
    if any(k[0] == "baseline" for k in summaries):
        arms.append(("baseline", "baseline"))
    arms.extend((r, _ratio_dir(r)) for r in cfg.run.ratios)

    terminal_rows = []
    convergence_rows = []
    for key, name in arms:
        per_seed = [summaries[(key, s)] for s in cfg.run.seeds
                    if (key, s) in summaries]
        if not per_seed:
            continue
        steps_m, steps_s = metrics.aggregate_series(
            [s.steps_smoothed for s in per_seed])
        rew_m, rew_s = metrics.aggregate_series(
            [s.reward_smoothed for s in per_seed])
        have_dq = all(s.delta_q_smoothed.size for s in per_seed)
        if have_dq:
            dq_m, dq_s = metrics.aggregate_series(
                [s.delta_q_smoothed for s in per_seed])
        path = os.path.join(sum_dir, f"{name}.csv")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["episode", "steps_mean", "steps_std", "reward_mean",
                         "reward_std", "delta_q_mean", "delta_q_std"])
            for t in range(steps_m.shape[0]):
                row = [t, repr(float(steps_m[t])), repr(float(steps_s[t])),
                       repr(float(rew_m[t])), repr(float(rew_s[t]))]
                row += ([repr(float(dq_m[t])), repr(float(dq_s[t]))]
                        if have_dq else ["", ""])
                wr.writerow(row)
        written.append(path)
        terminal_rows.append(
            [name, repr(float(steps_m[-1])), repr(float(steps_s[-1])),
             repr(float(rew_m[-1])), repr(float(rew_s[-1]))])
        if have_dq:
            conv = metrics.convergence_episode(
                dq_m, cfg.metrics.convergence_threshold,
                cfg.metrics.persistence)
            convergence_rows.append(
                [name, repr(cfg.metrics.convergence_threshold),
                 "" if conv is None else conv])

    path = os.path.join(sum_dir, "terminal.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["arm", "terminal_steps_mean", "terminal_steps_std",
                     "terminal_reward_mean", "terminal_reward_std"])
        wr.writerows(terminal_rows)
    written.append(path)
    path = os.path.join(sum_dir, "convergence.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["arm", "threshold", "convergence_episode"])
        wr.writerows(convergence_rows)
    written.append(path)
    return written


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def replay(manifest_path: str, out_dir: str,
           progress=None) -> tuple[int, list[str]]:
    """Re-run the campaign described by a manifest into ``out_dir`` and
    compare every output hash. Returns (n_compared, mismatches)."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    cfg = from_dict(_strip_nones(manifest["config"]))
    recorded_backend = manifest.get("tool", {}).get("backend")
    mismatches = []
    if recorded_backend and recorded_backend != backend_name():
        if progress:
            progress(f"note: manifest was produced on the {recorded_backend} "
                     f"backend, this is {backend_name()}")
    new_manifest, failures = run_campaign(cfg, out_dir, progress=progress)
    for fail in failures:
        mismatches.append(f"arm failed on replay: {fail}")
    old = manifest["outputs"]
    new = new_manifest["outputs"]
    for rel in sorted(set(old) | set(new)):
        if rel not in new:
            mismatches.append(f"missing on replay: {rel}")
        elif rel not in old:
            mismatches.append(f"unexpected new output: {rel}")
        elif old[rel] != new[rel]:
            mismatches.append(f"hash mismatch: {rel}")
    return len(old), mismatches


def _strip_nones(tree: dict) -> dict:
    """asdict writes None for unset optionals; dataclass defaults want them
    absent, so drop them on the way back in."""
    out = {}
    for section, table in tree.items():
        out[section] = {k: v for k, v in table.items() if v is not None}
    return out
