"""Numeric kernels shared by the object-level API and the episode runner.

Everything in this module is nopython-compatible and compiled when the
accelerator is enabled (see :mod:`advisim.accel`); with ``ADVISIM_NUMBA=0``
the same source runs as plain Python. Results are identical either way.

Scalar configuration travels in two flat arrays (``ci`` for integers, ``cf``
for floats) indexed by the ``CI_*`` / ``CF_*`` constants below, which keeps
the kernel signatures manageable and the packing logic in one place
(:func:`advisim.harness.pack_config`).
"""

import math

import numpy as np

from .accel import jit
from .rng import ENV_STREAM, next_below, next_float

# int config slots
CI_HEIGHT = 0
CI_WIDTH = 1
CI_GOALX = 2
CI_GOALY = 3
CI_STEPLIM = 4
CI_NAGENTS = 5
CI_ADVICE = 6
CI_DP = 7
CI_ATTACKMODE = 8  # 0 none, 1 in-protocol, 2 channel injection
CI_TILTED = 9
CI_DEGCAP = 10
CI_BLIND = 11
CI_BLOCKING = 12
CI_ZONE = 13
CI_ALARMLOGALL = 14
CI_ADVICELOG = 15
CI_ATTACKLOG = 16
CI_POLBASE = 17
CI_PRIVBASE = 18
CI_ATTBASE = 19
CI_PROTOBASE = 20
CI_OBSHOP = 21
CI_ATTRANDOM = 22
CI_OBSBLOCK = 23
CI_ATTAVOID = 24
CI_SLOTS = 25

# float config slots
CF_PHI_GOAL = 0
CF_PHI_FREE = 1
CF_PHI_OBST = 2
CF_PHI_WALL = 3
CF_ALPHA = 4
CF_GAMMA = 5
CF_EPS = 6
CF_W = 7
CF_LO = 8
CF_UP = 9
CF_SCALE = 10
CF_TAU = 11
CF_KAPPA = 12
CF_THETA = 13
CF_EXT_C = 14
CF_EXT_MU = 15
CF_ATT_EPS = 16
CF_ASK_EXP = 17
CF_GIVE_EXP = 18
CF_SLOTS = 19

ACCEPT_CAP = 0
ACCEPT_QCOND = 1
ACCEPT_EXTERNAL = 2


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


@jit
def laplace_from_uniform(u, mean, scale):
    """Inverse CDF of Laplace(mean, scale) at u, folded around the median.

    u = 0.5 maps to the mean exactly. u must lie in (0, 1).
    """
    v = u - 0.5
    if v < 0.0:
        return mean + scale * math.log(1.0 + 2.0 * v)
    return mean - scale * math.log(1.0 - 2.0 * v)


@jit
def draw_laplace(states, idx, mean, scale):
    u = next_float(states, idx)
    while u == 0.0:  # log(0) guard; measure-zero event
        u = next_float(states, idx)
    return laplace_from_uniform(u, mean, scale)


@jit
def draw_bounded_laplace(states, idx, value, scale, lo, up):
    """Laplace(value, scale) draw, rejected until it lands in [lo, up].

    The stationary law is the Laplace density restricted to the interval and
    renormalised, which is what the advising side publishes.
    """
    for _ in range(1_000_000):
        x = draw_laplace(states, idx, value, scale)
        if lo <= x <= up:
            return x
    raise ValueError("bounded Laplace sampler exceeded 1e6 rejections")


@jit
def laplace_cdf(x, mean, scale):
    z = (x - mean) / scale
    if z < 0.0:
        return 0.5 * math.exp(z)
    return 1.0 - 0.5 * math.exp(-z)


@jit
def laplace_inv_cdf(p, mean, scale):
    if p < 0.5:
        return mean + scale * math.log(2.0 * p)
    return mean - scale * math.log(2.0 * (1.0 - p))


@jit
def draw_trunc_laplace(states, idx, mean, scale, lo, up):
    """Laplace(mean, scale) conditioned on (lo, up), via inverse CDF.

    Distributionally identical to reject-until-inside, but O(1) even when
    the window sits many scale lengths into one tail, which happens at high
    poisoning degrees.
    """
    plo = laplace_cdf(lo, mean, scale)
    pup = laplace_cdf(up, mean, scale)
    u = next_float(states, idx)
    while u == 0.0:
        u = next_float(states, idx)
    x = laplace_inv_cdf(plo + u * (pup - plo), mean, scale)
    # float rounding can pin the result to a bound; nudge back inside
    if x <= lo:
        x = lo + (up - lo) * 1e-12
    elif x >= up:
        x = up - (up - lo) * 1e-12
    return x


@jit
def tilted_cdf(x, theta, scale, c):
    """CDF of the tilted two-sided exponential with density
    K * exp(-|x - theta| / scale + (x - theta) / c), where
    K = (c^2 - scale^2) / (2 * scale * c^2) and c > scale.

    Mass below theta is (c - scale) / (2c).
    """
    y = x - theta
    if y < 0.0:
        return (c - scale) / (2.0 * c) * math.exp(y * (scale + c) / (scale * c))
    return 1.0 - (c + scale) / (2.0 * c) * math.exp(-y * (c - scale) / (scale * c))


@jit
def tilted_inv_cdf(p, theta, scale, c):
    p_lo = (c - scale) / (2.0 * c)
    if p <= p_lo:
        return theta + scale * c / (scale + c) * math.log(p / p_lo)
    p_hi = (c + scale) / (2.0 * c)
    return theta - scale * c / (c - scale) * math.log((1.0 - p) / p_hi)


@jit
def draw_tilted(states, idx, theta, scale, c):
    u = next_float(states, idx)
    while u == 0.0:
        u = next_float(states, idx)
    return tilted_inv_cdf(u, theta, scale, c)


@jit
def draw_trunc_tilted(states, idx, theta, scale, c, lo, up):
    """Tilted draw conditioned on (lo, up), via inverse CDF."""
    plo = tilted_cdf(lo, theta, scale, c)
    pup = tilted_cdf(up, theta, scale, c)
    u = next_float(states, idx)
    while u == 0.0:
        u = next_float(states, idx)
    x = tilted_inv_cdf(plo + u * (pup - plo), theta, scale, c)
    if x <= lo:
        x = lo + (up - lo) * 1e-12
    elif x >= up:
        x = up - (up - lo) * 1e-12
    return x


# ---------------------------------------------------------------------------
# poisoning-degree solver
# ---------------------------------------------------------------------------


@jit
def degree_gap(t):
    """g(t) = 2t/(1-t) + ln(1-t) on t in (0, 1).

    g'(t) = (1+t)/(1-t)^2 > 0, so g is strictly increasing from 0 to
    infinity and every positive degree has exactly one root; bisection on
    (0, 1) therefore always converges.
    """
    return 2.0 * t / (1.0 - t) + math.log(1.0 - t)


@jit
def solve_multiplier(degree, scale):
    """Solve 2 b^2/(c^2 - b^2) + ln(1 - b^2/c^2) = degree for c > b.

    Substituting t = b^2/c^2 maps the problem onto degree_gap, which is
    strictly increasing (see above), and bisection resolves t to machine
    precision; c = b / sqrt(t).
    """
    lo_t = 0.0
    hi_t = 1.0 - 1e-16
    for _ in range(128):
        mid = 0.5 * (lo_t + hi_t)
        if degree_gap(mid) < degree:
            lo_t = mid
        else:
            hi_t = mid
    t = 0.5 * (lo_t + hi_t)
    return scale / math.sqrt(t)


@jit
def attack_mean_kernel(theta, scale, c):
    """Mean of the tilted density: (b^2 (theta - 2c) - theta c^2)/(b^2 - c^2)."""
    b2 = scale * scale
    c2 = c * c
    return (b2 * (theta - 2.0 * c) - theta * c2) / (b2 - c2)


# ---------------------------------------------------------------------------
# learner primitives
# ---------------------------------------------------------------------------


@jit
def argmax_low(row):
    """Index of the maximum, lowest index winning ties."""
    best = 0
    best_v = row[0]
    for a in range(1, row.shape[0]):
        if row[a] > best_v:
            best_v = row[a]
            best = a
    return best


@jit
def choose_action(states, idx, qrow, eps):
    """Epsilon-greedy over one Q row. eps = 0 draws nothing."""
    n = qrow.shape[0]
    if eps > 0.0 and next_float(states, idx) < eps:
        return next_below(states, idx, n)
    return argmax_low(qrow)


@jit
def q_update_value(q_sa, reward, best_next, alpha, gamma):
    return (1.0 - alpha) * q_sa + alpha * (reward + gamma * best_next)


# ---------------------------------------------------------------------------
# grid primitives
# ---------------------------------------------------------------------------


@jit
def apply_action(x, y, action, height, width):
    """Move one cell (0 up, 1 down, 2 left, 3 right, 4 stay); clip at walls.

    Returns (new_x, new_y, bumped).
    """
    nx = x
    ny = y
    if action == 0:
        nx = x - 1
    elif action == 1:
        nx = x + 1
    elif action == 2:
        ny = y - 1
    elif action == 3:
        ny = y + 1
    if nx < 0 or nx >= height or ny < 0 or ny >= width:
        return x, y, 1
    return nx, ny, 0


@jit
def cell_reward(state, prev_state, bumped, goal_state, cell_obst, cell_free,
                phi_goal, phi_free, phi_obst, phi_wall):
    """Reward for the transition into ``state``; precedence goal > obstacle >
    freeway > wall bump > 0. Obstacle and freeway cells pay on entry only, so
    sitting on one (or oscillating in place) earns nothing further."""
    if state == goal_state:
        return phi_goal
    if state != prev_state:
        if cell_obst[state] > 0:
            return phi_obst
        if cell_free[state] == 1:
            return phi_free
    if bumped == 1:
        return phi_wall
    return 0.0


@jit
def move_obstacles(obstacles, cell_obst, height, width, goal_x, goal_y,
                   hop, states):
    """Advance obstacles by one tick, drawing once per obstacle from the
    environment stream so the draw count stays fixed either way.

    hop=0: uniform move (4 directions or stay); moves that leave the grid
    or land on the goal are discarded.  hop=1: uniform relocation anywhere
    but the goal.
    """
    size = height * width
    for o in range(obstacles.shape[0]):
        x = obstacles[o, 0]
        y = obstacles[o, 1]
        if hop == 1:
            s = next_below(states, ENV_STREAM, size)
            nx = s // width
            ny = s % width
            if nx == goal_x and ny == goal_y:
                continue
        else:
            d = next_below(states, ENV_STREAM, 5)
            nx, ny, bumped = apply_action(x, y, d, height, width)
            if bumped == 1 or (nx == goal_x and ny == goal_y):
                continue
        cell_obst[x * width + y] -= 1
        cell_obst[nx * width + ny] += 1
        obstacles[o, 0] = nx
        obstacles[o, 1] = ny


@jit
def reset_entities(height, width, goal_x, goal_y, obstacles, cell_obst, pos, states):
    """Place agents then obstacles on distinct cells, none on the goal.

    Caller guarantees capacity (checked at config validation), so the
    rejection loop terminates.
    """
    size = height * width
    for s in range(size):
        cell_obst[s] = 0
    taken = np.zeros(size, dtype=np.uint8)
    taken[goal_x * width + goal_y] = 1
    for i in range(pos.shape[0]):
        s = next_below(states, ENV_STREAM, size)
        while taken[s] == 1:
            s = next_below(states, ENV_STREAM, size)
        taken[s] = 1
        pos[i, 0] = s // width
        pos[i, 1] = s % width
    for o in range(obstacles.shape[0]):
        s = next_below(states, ENV_STREAM, size)
        while taken[s] == 1:
            s = next_below(states, ENV_STREAM, size)
        taken[s] = 1
        obstacles[o, 0] = s // width
        obstacles[o, 1] = s % width
        cell_obst[s] += 1


@jit
def place_freeways(height, width, goal_x, goal_y, freeways, cell_free, states):
    """Fix freeway cells for the whole run: distinct, never the goal, and
    never orthogonally adjacent to each other. The spacing rule keeps the
    entry reward from forming a two-cell loop that pays every step."""
    size = height * width
    for s in range(size):
        cell_free[s] = 0
    for f in range(freeways.shape[0]):
        attempts = 0
        while True:
            attempts += 1
            if attempts > 1000000:
                raise ValueError("freeway placement failed; grid too crowded")
            s = next_below(states, 1, size)  # setup stream
            if s == goal_x * width + goal_y or cell_free[s] == 1:
                continue
            x = s // width
            y = s % width
            crowded = False
            if x > 0 and cell_free[s - width] == 1:
                crowded = True
            if x < height - 1 and cell_free[s + width] == 1:
                crowded = True
            if y > 0 and cell_free[s - 1] == 1:
                crowded = True
            if y < width - 1 and cell_free[s + 1] == 1:
                crowded = True
            if not crowded:
                break
        cell_free[s] = 1
        freeways[f, 0] = x
        freeways[f, 1] = y


# ---------------------------------------------------------------------------
# attack primitives
# ---------------------------------------------------------------------------


@jit
def poison_vector(out, states, idx, attacker_row, target_row, theta, scale,
                  lo, up, c_tab, mu_tab, degree_cap, tilted):
    """Craft one advice vector that undercuts the advisee's best action.

    Starting at degree 1, draw every action's value as the attacker's own
    estimate plus adversarial noise bounded to (lo, up); if the value at the
    advisee's argmax action does not fall below the advisee's own estimate,
    escalate the degree and redraw the whole vector. The vector built at
    degree_cap + 1 is returned unconditionally.

    Returns (degree, accepted_by) with accepted_by ACCEPT_QCOND when the
    undercut test passed and ACCEPT_CAP when the cap fired, so a recorded
    ACCEPT_QCOND always implies degree <= degree_cap.
    """
    a_best = argmax_low(target_row)
    thresh = target_row[a_best]
    degree = 0
    while True:
        degree += 1
        c = c_tab[degree - 1]
        mu = mu_tab[degree - 1]
        for a in range(out.shape[0]):
            base = attacker_row[a]
            if tilted == 1:
                out[a] = base + draw_trunc_tilted(
                    states, idx, theta, scale, c, lo - base, up - base)
            else:
                out[a] = base + draw_trunc_laplace(
                    states, idx, mu, scale, lo - base, up - base)
        if degree > degree_cap:
            return degree, ACCEPT_CAP
        if out[a_best] < thresh:
            return degree, ACCEPT_QCOND


@jit
def inject_noise(vec, states, idx, theta, scale, c, mu, tilted, lo, up):
    """Add one unbounded adversarial draw per entry, then clamp to [lo, up].

    Models an attacker on the reporting channel who cannot re-run the
    bounded sampler, only distort what passes through.
    """
    for a in range(vec.shape[0]):
        if tilted == 1:
            x = vec[a] + draw_tilted(states, idx, theta, scale, c)
        else:
            x = vec[a] + draw_laplace(states, idx, mu, scale)
        if x < lo:
            x = lo
        elif x > up:
            x = up
        vec[a] = x


# ---------------------------------------------------------------------------
# detector primitives
# ---------------------------------------------------------------------------


@jit
def max_abs_deviation(vec, ref_row):
    d = 0.0
    for a in range(vec.shape[0]):
        dev = abs(vec[a] - ref_row[a])
        if dev > d:
            d = dev
    return d


@jit
def tracker_update(vec, mean_row, count_row):
    """Fold an accepted vector into the per-action running means."""
    for a in range(vec.shape[0]):
        count_row[a] += 1
        mean_row[a] += (vec[a] - mean_row[a]) / count_row[a]


# ---------------------------------------------------------------------------
# advice exchange
# ---------------------------------------------------------------------------


@jit
def decay_probability(count, exponent):
    """(1 + count)^-exponent; the sqrt path keeps the default bit-exact."""
    if exponent == 0.5:
        return 1.0 / math.sqrt(1.0 + count)
    return (1.0 + count) ** (-exponent)


@jit
def exchange_advice(ci, cf, advisee, state, pos, q, visit, visit_life,
                    ask_budget, give_budget, attacker_flags, c_tab, mu_tab,
                    states, out_vec, out_advisor, out_mal, out_deg, out_by):
    """Run one ask round for ``advisee`` at ``state``.

    The ask fires with probability (1 + own visit count)^-ask_exponent when
    budget remains; the count restarts each episode, so fresh states always
    get asked about. Every in-zone peer with give budget responds with the
    same family of formula on its lifetime visit count of the state:
    seasoned advisors answer rarely, which stretches give budgets across
    the whole run.
    Benign responders publish their Q row (noised and bounded when privacy
    is on); in-protocol attackers substitute a crafted vector; channel
    attackers distort the benign vector after the fact.

    Returns (asked, n_records); budgets are decremented in place. Detection
    and aggregation are the caller's concern.
    """
    n_agents = ci[CI_NAGENTS]
    n_actions = q.shape[2]
    zone = ci[CI_ZONE]
    dp_on = ci[CI_DP]
    lo = cf[CF_LO]
    up = cf[CF_UP]
    scale = cf[CF_SCALE]
    attack_mode = ci[CI_ATTACKMODE]
    tilted = ci[CI_TILTED]
    theta = cf[CF_THETA]

    if ask_budget[advisee] <= 0:
        return 0, 0
    p_ask = decay_probability(visit[advisee, state], cf[CF_ASK_EXP])
    if next_float(states, ci[CI_PROTOBASE] + advisee) >= p_ask:
        return 0, 0
    ask_budget[advisee] -= 1

    n = 0
    for k in range(n_agents):
        if k == advisee:
            continue
        dx = abs(pos[advisee, 0] - pos[k, 0])
        dy = abs(pos[advisee, 1] - pos[k, 1])
        cheb = dx if dx > dy else dy
        if cheb > zone:
            continue
        if give_budget[k] <= 0:
            continue
        p_give = decay_probability(visit_life[k, state], cf[CF_GIVE_EXP])
        if next_float(states, ci[CI_PROTOBASE] + k) >= p_give:
            continue
        give_budget[k] -= 1

        mal = 0
        deg = 0
        by = ACCEPT_EXTERNAL
        if attack_mode == 1 and attacker_flags[k] == 1:
            mal = 1
            if ci[CI_BLIND] == 1:
                deg, by = poison_vector(
                    out_vec[n], states, ci[CI_ATTBASE] + k, q[k, state],
                    q[k, state], theta, scale, lo, up, c_tab, mu_tab,
                    ci[CI_DEGCAP], tilted)
            else:
                deg, by = poison_vector(
                    out_vec[n], states, ci[CI_ATTBASE] + k, q[k, state],
                    q[advisee, state], theta, scale, lo, up, c_tab, mu_tab,
                    ci[CI_DEGCAP], tilted)
        else:
            for a in range(n_actions):
                if dp_on == 1:
                    v = q[k, state, a]
                    if v < lo:
                        v = lo
                    elif v > up:
                        v = up
                    out_vec[n, a] = draw_bounded_laplace(
                        states, ci[CI_PRIVBASE] + k, v, scale, lo, up)
                else:
                    out_vec[n, a] = q[k, state, a]
            if attack_mode == 2 and attacker_flags[k] == 1:
                mal = 1
                inject_noise(out_vec[n], states, ci[CI_ATTBASE] + k, theta,
                             scale, cf[CF_EXT_C], cf[CF_EXT_MU], tilted, lo, up)
        out_advisor[n] = k
        out_mal[n] = mal
        out_deg[n] = deg
        out_by[n] = by
        n += 1
    return 1, n


# ---------------------------------------------------------------------------
# full episode
# ---------------------------------------------------------------------------


@jit
def run_episode(ci, cf, episode_idx, obstacles, cell_obst, cell_free, pos,
                q, visit, visit_life, ask_budget, give_budget, attacker_flags,
                c_tab, mu_tab, q0_mean, q0_count, states, gamma_row,
                att_i, att_f, att_cur, adv_i, adv_f, adv_cur,
                alm_i, alm_f, alm_cur, cum_reward,
                sc_vec, sc_adv, sc_mal, sc_deg, sc_by, sc_sum):
    """One full episode: per pass, every agent (in id order) gathers advice,
    screens it, folds it into its row, acts epsilon-greedily and updates.
    Obstacles relocate after each completed pass. The episode ends when a
    pass leaves some agent on the goal, or at the step limit.

    Visit counts drive the ask/give probabilities and measure familiarity
    within the episode, so they restart at zero here; advice then flows at
    every episode's start for the whole run instead of drying up once the
    tables have seen every state.

    Returns (steps, winner, phi, alarms, asks, responses). phi is the
    winner's cumulative reward, or the mean over agents on a timeout.
    """
    height = ci[CI_HEIGHT]
    width = ci[CI_WIDTH]
    goal_state = ci[CI_GOALX] * width + ci[CI_GOALY]
    n_agents = ci[CI_NAGENTS]
    n_actions = q.shape[2]
    step_limit = ci[CI_STEPLIM]
    advice_on = ci[CI_ADVICE]
    dp_on = ci[CI_DP]
    alpha = cf[CF_ALPHA]
    gamma_disc = cf[CF_GAMMA]
    eps = cf[CF_EPS]
    w = cf[CF_W]
    threshold = cf[CF_TAU] * cf[CF_KAPPA] if dp_on == 1 else cf[CF_TAU]

    for i in range(n_agents):
        cum_reward[i] = 0.0
        for s0 in range(visit.shape[1]):
            visit[i, s0] = 0

    steps = 0
    winner = -1
    alarms = 0
    asks = 0
    responses = 0
    while steps < step_limit:
        for i in range(n_agents):
            s = pos[i, 0] * width + pos[i, 1]
            roaming = ci[CI_ATTRANDOM] == 1 and attacker_flags[i] == 1
            if advice_on == 1:
                asked, nrec = exchange_advice(
                    ci, cf, i, s, pos, q, visit, visit_life,
                    ask_budget, give_budget,
                    attacker_flags, c_tab, mu_tab, states,
                    sc_vec, sc_adv, sc_mal, sc_deg, sc_by)
                asks += asked
                if nrec > 0:
                    responses += nrec
                    for a in range(n_actions):
                        sc_sum[a] = 0.0
                    used = 0
                    for r in range(nrec):
                        vec = sc_vec[r]
                        dev = max_abs_deviation(vec, q0_mean[i, s])
                        alarmed = dev > threshold
                        if alarmed:
                            alarms += 1
                        if (alarmed or ci[CI_ALARMLOGALL] == 1) and alm_cur[0] < alm_i.shape[0]:
                            row = alm_cur[0]
                            alm_i[row, 0] = episode_idx
                            alm_i[row, 1] = steps
                            alm_i[row, 2] = i
                            alm_i[row, 3] = sc_adv[r]
                            alm_i[row, 4] = s
                            alm_i[row, 5] = 1 if alarmed else 0
                            alm_f[row, 0] = dev
                            alm_f[row, 1] = threshold
                            alm_cur[0] = row + 1
                        if not alarmed:
                            tracker_update(vec, q0_mean[i, s], q0_count[i, s])
                        if not (alarmed and ci[CI_BLOCKING] == 1):
                            for a in range(n_actions):
                                sc_sum[a] += vec[a]
                            used += 1
                        if sc_mal[r] == 1:
                            gamma_row[sc_deg[r]] += 1
                            if ci[CI_ATTACKLOG] == 1 and att_cur[0] < att_i.shape[0]:
                                row = att_cur[0]
                                att_i[row, 0] = episode_idx
                                att_i[row, 1] = steps
                                att_i[row, 2] = sc_adv[r]
                                att_i[row, 3] = s
                                att_i[row, 4] = sc_deg[r]
                                att_i[row, 5] = sc_by[r]
                                if sc_by[r] == ACCEPT_EXTERNAL:
                                    att_f[row, 0] = cf[CF_EXT_MU]
                                    att_f[row, 1] = cf[CF_EXT_C]
                                else:
                                    att_f[row, 0] = mu_tab[sc_deg[r] - 1]
                                    att_f[row, 1] = c_tab[sc_deg[r] - 1]
                                att_cur[0] = row + 1
                        if ci[CI_ADVICELOG] == 1:
                            for a in range(n_actions):
                                if adv_cur[0] >= adv_i.shape[0]:
                                    break
                                row = adv_cur[0]
                                adv_i[row, 0] = episode_idx
                                adv_i[row, 1] = steps
                                adv_i[row, 2] = i
                                adv_i[row, 3] = sc_adv[r]
                                adv_i[row, 4] = s
                                adv_i[row, 5] = a
                                adv_i[row, 6] = sc_mal[r]
                                adv_f[row, 0] = vec[a]
                                adv_cur[0] = row + 1
                    if used > 0:
                        inv = 1.0 / used
                        for a in range(n_actions):
                            q[i, s, a] = w * q[i, s, a] + (1.0 - w) * sc_sum[a] * inv
            visit[i, s] += 1
            visit_life[i, s] += 1

            if roaming:
                act = choose_action(states, ci[CI_POLBASE] + i, q[i, s],
                                    cf[CF_ATT_EPS])
                if ci[CI_ATTAVOID] > 0:
                    nx0, ny0, _ = apply_action(pos[i, 0], pos[i, 1], act,
                                               height, width)
                    dx = nx0 - ci[CI_GOALX]
                    if dx < 0:
                        dx = -dx
                    dy = ny0 - ci[CI_GOALY]
                    if dy < 0:
                        dy = -dy
                    d = dx if dx > dy else dy
                    if d <= ci[CI_ATTAVOID]:
                        # bounce off the patrol boundary: mirror the move
                        if act == 0:
                            act = 1
                        elif act == 1:
                            act = 0
                        elif act == 2:
                            act = 3
                        elif act == 3:
                            act = 2
            else:
                act = choose_action(states, ci[CI_POLBASE] + i, q[i, s], eps)
            nx, ny, bumped = apply_action(pos[i, 0], pos[i, 1], act, height, width)
            ns = nx * width + ny
            if (ci[CI_OBSBLOCK] == 1 and ns != s and ns != goal_state
                    and cell_obst[ns] > 0):
                nx = pos[i, 0]
                ny = pos[i, 1]
                ns = s
                r = cf[CF_PHI_OBST]
            else:
                r = cell_reward(ns, s, bumped, goal_state, cell_obst, cell_free,
                                cf[CF_PHI_GOAL], cf[CF_PHI_FREE],
                                cf[CF_PHI_OBST], cf[CF_PHI_WALL])
            cum_reward[i] += r
            best_next = 0.0
            if ns != goal_state:  # terminal state bootstraps zero
                best_next = q[i, ns, argmax_low(q[i, ns])]
            q[i, s, act] = q_update_value(q[i, s, act], r, best_next,
                                          alpha, gamma_disc)
            pos[i, 0] = nx
            pos[i, 1] = ny
            if ns == goal_state and winner < 0:
                winner = i
        steps += 1
        if winner >= 0:
            break
        move_obstacles(obstacles, cell_obst, height, width,
                       ci[CI_GOALX], ci[CI_GOALY], ci[CI_OBSHOP], states)

    if winner >= 0:
        phi = cum_reward[winner]
    else:
        total = 0.0
        for i in range(n_agents):
            total += cum_reward[i]
        phi = total / n_agents
    return steps, winner, phi, alarms, asks, responses
