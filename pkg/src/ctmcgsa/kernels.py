"""Hot loops: rate programs and exact CTMC path simulation.

Everything here is compiled by numba unless ``CTMCGSA_DISABLE_JIT`` is set,
in which case the same code runs as plain Python over numpy arrays.  Both
paths consume identical random draws in identical order, so trajectories
agree bit for bit.
"""

import math

import numpy as np

from ._jit import njit, prange
from .expr import OP_ADD, OP_COUNT, OP_DIV, OP_LIT, OP_MUL, OP_PARAM, OP_POP, OP_SLOT, OP_SUB
from .rng import mrg_next, mrg_seed

# representation kinds
DIRECT = 0
DIRECT2 = 1
FIRST_REACTION = 2
MNRM = 3

# terminal status codes
ABSORBED = 0
HORIZON = 1
STOPPED = 2
ERR_RATE = 3
ERR_CAP = 4
ERR_IMPOSSIBLE = 5


@njit
def eval_program(code, length, k, literals, theta, slots, x, N, stack):
    sp = 0
    for i in range(length[k]):
        op = code[k, i, 0]
        arg = code[k, i, 1]
        if op == OP_COUNT:
            stack[sp] = x[arg]
            sp += 1
        elif op == OP_SLOT:
            stack[sp] = slots[arg]
            sp += 1
        elif op == OP_PARAM:
            stack[sp] = theta[arg]
            sp += 1
        elif op == OP_LIT:
            stack[sp] = literals[arg]
            sp += 1
        elif op == OP_POP:
            stack[sp] = N
            sp += 1
        else:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == OP_MUL:
                r = a * b
            elif op == OP_ADD:
                r = a + b
            elif op == OP_SUB:
                r = a - b
            elif op == OP_DIV:
                if b == 0.0:
                    r = np.nan
                else:
                    r = a / b
            else:
                r = np.nan
            stack[sp - 1] = r
    return stack[0]


@njit
def compute_rates(code, length, literals, theta, slots, x, N, stack, rates):
    """Fill ``rates``; return (total, index of first invalid channel or -1)."""
    total = 0.0
    for j in range(rates.shape[0]):
        r = eval_program(code, length, j, literals, theta, slots, x, N, stack)
        if not (r >= 0.0) or r == np.inf:
            rates[j] = r
            return total, j
        rates[j] = r
        total += r
    return total, -1


@njit
def update_rates(code, length, literals, theta, slots, x, N, stack, rates, dep_ptr, dep_idx, fired):
    """Re-evaluate only channels whose rate reads a compartment touched by ``fired``."""
    for k in range(dep_ptr[fired], dep_ptr[fired + 1]):
        j = dep_idx[k]
        r = eval_program(code, length, j, literals, theta, slots, x, N, stack)
        rates[j] = r
        if not (r >= 0.0) or r == np.inf:
            return j
    return -1


@njit
def select_channel(rates, total, u):
    """Half-open cumulative intervals of p_j = rate_j / total, in channel order."""
    cum = 0.0
    last = -1
    for j in range(rates.shape[0]):
        if rates[j] > 0.0:
            cum += rates[j] / total
            last = j
            if u < cum:
                return j
    # u beyond the rounded cumulative sum: the last positive channel owns it
    return last


@njit
def simulate(
    kind,
    code,
    length,
    slot_code,
    slot_length,
    literals,
    max_stack,
    src,
    tgt,
    dep_ptr,
    dep_idx,
    x0,
    N,
    theta,
    rng,
    t_end,
    max_events,
    stop_mask,
    use_stop,
    grid,
    grid_comp,
    grid_out,
    record,
):
    """Simulate one path.

    Returns ``(status, bad_channel, n_events, t_last, t_stop, x, times, channels)``.
    ``t_stop`` is the time the stop predicate (all ``stop_mask`` compartments
    empty) first held, or inf.  When ``grid`` is non-empty, ``grid_out[k]``
    receives the right-continuous value of compartment ``grid_comp`` at
    ``grid[k]``.
    """
    n_ch = src.shape[0]
    x = x0.copy()
    stack = np.empty(max_stack, dtype=np.float64)
    slots = np.empty(slot_code.shape[0], dtype=np.float64)
    for k in range(slots.shape[0]):
        slots[k] = eval_program(slot_code, slot_length, k, literals, theta, slots, x, N, stack)
    rates = np.empty(n_ch, dtype=np.float64)

    internal = np.zeros(n_ch, dtype=np.float64)
    next_fire = np.zeros(n_ch, dtype=np.float64)
    if kind == MNRM:
        for j in range(n_ch):
            next_fire[j] = -math.log(mrg_next(rng, j))

    cap = 64 if record else 1
    times = np.empty(cap, dtype=np.float64)
    chans = np.empty(cap, dtype=np.int64)

    n_grid = grid.shape[0]
    gk = 0
    n = 0
    t = 0.0
    t_stop = np.inf
    bad = -1
    masked = 0
    for c in range(x.shape[0]):
        masked += stop_mask[c] * x[c]

    if use_stop and masked == 0:
        status = STOPPED
        t_stop = 0.0
    else:
        total, bad = compute_rates(code, length, literals, theta, slots, x, N, stack, rates)
        while True:
            if bad >= 0:
                status = ERR_RATE
                break
            total = 0.0
            for j in range(n_ch):
                total += rates[j]
            if total == 0.0:
                status = ABSORBED
                break
            if n >= max_events:
                status = ERR_CAP
                break

            chosen = -1
            if kind == FIRST_REACTION:
                dt = np.inf
                for j in range(n_ch):
                    u = mrg_next(rng, j)
                    if rates[j] > 0.0:
                        d = -math.log(u) / rates[j]
                        if d < dt:
                            dt = d
                            chosen = j
            elif kind == MNRM:
                dt = np.inf
                for j in range(n_ch):
                    if rates[j] > 0.0:
                        d = (next_fire[j] - internal[j]) / rates[j]
                        if d < dt:
                            dt = d
                            chosen = j
            elif kind == DIRECT2:
                u1 = mrg_next(rng, 0)
                u2 = mrg_next(rng, 1)
                dt = -math.log(u1) / total
                chosen = select_channel(rates, total, u2)
            else:
                u1 = mrg_next(rng, 0)
                u2 = mrg_next(rng, 0)
                dt = -math.log(u1) / total
                chosen = select_channel(rates, total, u2)

            t_new = t + dt
            if t_new > t_end:
                status = HORIZON
                break
            while gk < n_grid and grid[gk] < t_new:
                grid_out[gk] = x[grid_comp]
                gk += 1
            s = src[chosen]
            if x[s] < 1:
                status = ERR_IMPOSSIBLE
                bad = chosen
                break
            x[s] -= 1
            x[tgt[chosen]] += 1
            t = t_new
            if kind == MNRM:
                for j in range(n_ch):
                    internal[j] += rates[j] * dt
                next_fire[chosen] -= math.log(mrg_next(rng, chosen))
            if record:
                if n == times.shape[0]:
                    grown_t = np.empty(2 * n, dtype=np.float64)
                    grown_c = np.empty(2 * n, dtype=np.int64)
                    grown_t[:n] = times
                    grown_c[:n] = chans
                    times = grown_t
                    chans = grown_c
                times[n] = t
                chans[n] = chosen
            n += 1
            bad = update_rates(code, length, literals, theta, slots, x, N, stack, rates, dep_ptr, dep_idx, chosen)
            if use_stop:
                masked += stop_mask[tgt[chosen]] - stop_mask[s]
                if masked == 0:
                    status = STOPPED
                    t_stop = t
                    break

    while gk < n_grid:
        grid_out[gk] = x[grid_comp]
        gk += 1
    if not record:
        n_rec = 0
    else:
        n_rec = n
    return status, bad, n, t, t_stop, x, times[:n_rec].copy(), chans[:n_rec].copy()


@njit(parallel=True)
def simulate_batch(
    kind,
    code,
    length,
    slot_code,
    slot_length,
    literals,
    max_stack,
    src,
    tgt,
    dep_ptr,
    dep_idx,
    x0,
    N,
    thetas,
    seeds,
    t_end,
    max_events,
    stop_mask,
    use_stop,
    grid,
    grid_comp,
    out_stop,
    out_grid,
    out_status,
    out_events,
):
    """One independent simulation per row of (``thetas``, ``seeds``)."""
    n_rows = thetas.shape[0]
    n_streams = seeds.shape[1]
    for r in prange(n_rows):
        rng = np.empty((n_streams, 6), dtype=np.int64)
        for s in range(n_streams):
            mrg_seed(seeds[r, s], rng, s)
        status, bad, n, t, t_stop, x, times, chans = simulate(
            kind,
            code,
            length,
            slot_code,
            slot_length,
            literals,
            max_stack,
            src,
            tgt,
            dep_ptr,
            dep_idx,
            x0,
            N,
            thetas[r],
            rng,
            t_end,
            max_events,
            stop_mask,
            use_stop,
            grid,
            grid_comp,
            out_grid[r],
            False,
        )
        out_stop[r] = t_stop
        out_status[r] = status
        out_events[r] = n
