"""Numeric kernels for the feedback law and the closed-loop integrator.

Everything here is written against plain float64 arrays with 0-based
obstacle indices so the functions can be JIT-compiled.  The public modules
(shadow, controller, simulator) wrap these kernels, convert to the 1-based
obstacle ids used everywhere else, and raise proper exceptions from the
status codes.  When numba is unavailable the same code runs as pure Python
(slow but identical).
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except Exception:  # pragma: no cover - fallback keeps the package importable
    def njit(*args, **kwargs):
        def wrapper(func):
            return func
        return wrapper

_JIT = dict(cache=True, nogil=True, fastmath=False)

# Control status codes shared with the wrappers.
STATUS_OK = 0
STATUS_INFEASIBLE = 1   # projection requested for a non-blocking obstacle
STATUS_CYCLE = 2        # an obstacle reappeared in the projection chain
STATUS_CAP = 3          # chain cap reached while a blocking obstacle remains

# Trajectory outcome codes shared with the simulator wrapper.
OUT_CONVERGED = 0
OUT_STALLED = 1
OUT_UNSAFE = 2
OUT_TIMEOUT = 3
OUT_DIAGNOSTIC = 4

ZERO_SPEED = 1e-14      # below this, angles are undefined and projections stay zero


@njit(**_JIT)
def _clearance(x, centers, radii, r0):
    """Signed distance to the free-space boundary (negative outside F)."""
    n = x.shape[0]
    s = 0.0
    for j in range(n):
        s += x[j] * x[j]
    best = r0 - math.sqrt(s)
    for i in range(centers.shape[0]):
        s = 0.0
        for j in range(n):
            d = x[j] - centers[i, j]
            s += d * d
        g = math.sqrt(s) - radii[i]
        if g < best:
            best = g
    return best


@njit(**_JIT)
def _in_shadow(x, xd, c, r, ang_tol):
    """Shadow-region membership: x inside the cone anchored at xd enclosing
    the ball (c, r), at or behind the closest approach of the sight line."""
    n = x.shape[0]
    aa = 0.0
    gg = 0.0
    ag = 0.0
    bb = 0.0
    for j in range(n):
        a = c[j] - xd[j]
        g = x[j] - xd[j]
        aa += a * a
        gg += g * g
        ag += a * g
        bb += (c[j] - x[j]) * (xd[j] - x[j])
    if gg == 0.0:
        return True  # the cone vertex belongs to the closed cone
    if bb < 0.0:
        return False
    rhs = math.sqrt(gg * max(aa - r * r, 0.0))
    # angular tolerance mapped into the dot-product domain
    return ag >= rhs - ang_tol * r * math.sqrt(gg)


@njit(**_JIT)
def _region_query(x, xd, centers, radii, ang_tol):
    """Owner of x among the obstacles shadowing it from xd.

    Returns the 0-based index of the owner, or -1 when x is visible.  The
    owner is the obstacle whose ball the sight segment [x, xd] enters
    first from x: the one actually blocking the line of sight, and the
    one the projection chain must avoid before anything behind it.
    """
    n = x.shape[0]
    ll = 0.0
    for j in range(n):
        w = xd[j] - x[j]
        ll += w * w
    if ll < ZERO_SPEED * ZERO_SPEED:
        return -1  # at the destination
    seglen = math.sqrt(ll)
    best = -1
    best_t = 0.0
    for i in range(centers.shape[0]):
        if not _in_shadow(x, xd, centers[i], radii[i], ang_tol):
            continue
        tstar = 0.0
        db = 0.0
        for j in range(n):
            b = centers[i, j] - x[j]
            tstar += b * (xd[j] - x[j])
            db += b * b
        tstar /= seglen
        disc = tstar * tstar - (db - radii[i] * radii[i])
        tent = tstar - math.sqrt(max(disc, 0.0))
        if best < 0 or tent < best_t:
            best = i
            best_t = tent
    return best


@njit(**_JIT)
def _xi(u, x, c, r, ang_tol, out):
    """Optimal projection of u onto the enclosing cone of ball (c, r).

    Division-free form u - ||u|| sin(theta-beta)/sin(theta) (c-x)/||c-x||,
    well defined at beta = 0.  Within ang_tol of beta = theta the input is
    returned unchanged so the control is bit-level continuous on the exit
    set.  Returns a status code; out receives the projected vector.
    """
    n = u.shape[0]
    nu2 = 0.0
    dd = 0.0
    ud = 0.0
    for j in range(n):
        nu2 += u[j] * u[j]
        b = c[j] - x[j]
        dd += b * b
        ud += u[j] * b
    nu = math.sqrt(nu2)
    if nu < ZERO_SPEED:
        for j in range(n):
            out[j] = 0.0
        return STATUS_OK
    d = math.sqrt(dd)
    ratio = r / d
    if ratio > 1.0:
        ratio = 1.0
    theta = math.asin(ratio)
    cosb = ud / (nu * d)
    if cosb > 1.0:
        cosb = 1.0
    elif cosb < -1.0:
        cosb = -1.0
    beta = math.acos(cosb)
    if beta > theta + ang_tol:
        return STATUS_INFEASIBLE
    if beta >= theta - ang_tol:
        for j in range(n):
            out[j] = u[j]
        return STATUS_OK
    scale = nu * math.sin(theta - beta) / math.sin(theta) / d
    for j in range(n):
        out[j] = u[j] - scale * (c[j] - x[j])
    return STATUS_OK


@njit(**_JIT)
def _set_distance(vertex, c, r, p):
    """Distance from p to the shadow/hat set anchored at vertex for ball (c, r).

    The set is (enclosing cone about c - vertex) minus the open ball of
    diameter [vertex, c]; both pieces are rotationally symmetric about the
    axis, so the computation is exact in the 2-plane spanned by the axis
    and p - vertex.  The isolated vertex point does not count as part of
    the set.
    """
    n = vertex.shape[0]
    dd = 0.0
    bb = 0.0
    p1num = 0.0
    for j in range(n):
        a = c[j] - vertex[j]
        b = p[j] - vertex[j]
        dd += a * a
        bb += b * b
        p1num += a * b
    d = math.sqrt(dd)
    ratio = r / d
    if ratio > 1.0:
        ratio = 1.0
    sinpsi = ratio
    cospsi = math.sqrt(max(1.0 - ratio * ratio, 0.0))
    tau = d * cospsi
    p1 = p1num / d
    p2 = math.sqrt(max(bb - p1 * p1, 0.0))
    pn = math.sqrt(bb)
    if bb > 0.0 and bb >= d * p1 and p1 >= cospsi * pn:
        return 0.0
    # upper tangent ray {T + s (cospsi, sinpsi), s >= 0}; the reduction puts
    # p in the upper half-plane, so the lower ray is never closer
    tx = tau * cospsi
    ty = tau * sinpsi
    wx = p1 - tx
    wy = p2 - ty
    s = wx * cospsi + wy * sinpsi
    ww = wx * wx + wy * wy
    if s <= 0.0:
        dray = math.sqrt(ww)
    else:
        dray = math.sqrt(max(ww - s * s, 0.0))
    # far arc of the Thales circle on diameter [vertex, c], clipped to the wedge
    mx = 0.5 * d
    ex = p1 - mx
    ey = p2
    em = math.sqrt(ex * ex + ey * ey)
    if em == 0.0:
        darc = 0.5 * d
    else:
        qx = mx + 0.5 * d * ex / em
        qy = 0.5 * d * ey / em
        qn = math.sqrt(qx * qx + qy * qy)
        if qn > 0.0 and qx >= cospsi * qn:
            darc = abs(em - 0.5 * d)
        else:
            darc = dray  # nearest arc endpoint is the tangent point, covered above
    if darc < dray:
        return darc
    return dray


@njit(**_JIT)
def _near_set_distance(vertex, c, r, p):
    """Distance from p to the hat of the enclosing cone of ball (c, r)
    seen from vertex: the cone portion between the vertex and the ball
    (cone intersected with the closed ball of diameter [vertex, c]).

    This is the corridor the vehicle sweeps while steering around the
    ball; obstacles reaching into it must join the projection chain.
    Rotational symmetry makes the 2-plane computation exact.
    """
    n = vertex.shape[0]
    dd = 0.0
    bb = 0.0
    p1num = 0.0
    for j in range(n):
        a = c[j] - vertex[j]
        b = p[j] - vertex[j]
        dd += a * a
        bb += b * b
        p1num += a * b
    d = math.sqrt(dd)
    ratio = r / d
    if ratio > 1.0:
        ratio = 1.0
    sinpsi = ratio
    cospsi = math.sqrt(max(1.0 - ratio * ratio, 0.0))
    tau = d * cospsi
    p1 = p1num / d
    p2 = math.sqrt(max(bb - p1 * p1, 0.0))
    pn = math.sqrt(bb)
    # membership: inside the Thales ball and inside the wedge
    if bb <= d * p1 and p1 >= cospsi * pn:
        return 0.0
    # boundary pieces: the cone flank segment [vertex, T] and the far arc
    # of the Thales circle clipped to the wedge (the reduction puts p in
    # the upper half-plane)
    tx = tau * cospsi
    ty = tau * sinpsi
    s = p1 * cospsi + p2 * sinpsi
    if s <= 0.0:
        dseg = pn
    elif s >= tau:
        dseg = math.sqrt((p1 - tx) * (p1 - tx) + (p2 - ty) * (p2 - ty))
    else:
        dseg = math.sqrt(max(bb - s * s, 0.0))
    mx = 0.5 * d
    ex = p1 - mx
    ey = p2
    em = math.sqrt(ex * ex + ey * ey)
    if em == 0.0:
        darc = 0.5 * d
    else:
        qx = mx + 0.5 * d * ex / em
        qy = 0.5 * d * ey / em
        qn = math.sqrt(qx * qx + qy * qy)
        if qn > 0.0 and qx >= cospsi * qn:
            darc = abs(em - 0.5 * d)
        else:
            darc = dseg
    if darc < dseg:
        return darc
    return dseg


@njit(**_JIT)
def _next_obstacle(u, x, cur, centers, radii, ang_tol):
    """Closest obstacle (gap distance to the current one) that reaches into
    the hat of obstacle `cur` seen from x and strictly contains u in its
    enclosing cone.  Returns -1 when the path is free."""
    n = x.shape[0]
    nu2 = 0.0
    for j in range(n):
        nu2 += u[j] * u[j]
    nu = math.sqrt(nu2)
    if nu < ZERO_SPEED:
        return -1
    best = -1
    best_gap = 0.0
    for k in range(centers.shape[0]):
        if k == cur:
            continue
        dd = 0.0
        ud = 0.0
        for j in range(n):
            b = centers[k, j] - x[j]
            dd += b * b
            ud += u[j] * b
        d = math.sqrt(dd)
        ratio = radii[k] / d
        if ratio > 1.0:
            ratio = 1.0
        theta = math.asin(ratio)
        cosb = ud / (nu * d)
        if cosb > 1.0:
            cosb = 1.0
        elif cosb < -1.0:
            cosb = -1.0
        beta = math.acos(cosb)
        if beta >= theta - ang_tol:
            continue  # on-cone directions graze tangentially, no projection needed
        if _near_set_distance(x, centers[cur], radii[cur], centers[k]) > radii[k] + 1e-12:
            continue
        gg = 0.0
        for j in range(n):
            g = centers[k, j] - centers[cur, j]
            gg += g * g
        gap = math.sqrt(gg) - radii[k] - radii[cur]
        if best < 0 or gap < best_gap:
            best = k
            best_gap = gap
    return best


@njit(**_JIT)
def _control(x, xd, centers, radii, gamma, ang_tol, max_chain,
             chain, controls):
    """Feedback law: nominal control in the visible set, successive cone
    projections through the blocking-obstacle chain in the blind set.

    chain is an int64 buffer of length >= max_chain, controls a float64
    buffer of shape (max_chain + 1, n).  Returns (h, status); the control
    vector is controls[h] and the chain obstacles are chain[:h].
    """
    n = x.shape[0]
    nu2 = 0.0
    for j in range(n):
        controls[0, j] = -gamma * (x[j] - xd[j])
        nu2 += controls[0, j] * controls[0, j]
    if nu2 < ZERO_SPEED * ZERO_SPEED:
        return 0, STATUS_OK
    owner = _region_query(x, xd, centers, radii, ang_tol)
    if owner < 0:
        return 0, STATUS_OK
    cur = owner
    chain[0] = owner
    h = 1
    while True:
        st = _xi(controls[h - 1], x, centers[cur], radii[cur], ang_tol, controls[h])
        if st != STATUS_OK:
            return h, st
        nu2 = 0.0
        for j in range(n):
            nu2 += controls[h, j] * controls[h, j]
        if nu2 < ZERO_SPEED * ZERO_SPEED:
            return h, STATUS_OK  # central half-line: the projected control vanished
        nxt = _next_obstacle(controls[h], x, cur, centers, radii, ang_tol)
        if nxt < 0:
            return h, STATUS_OK
        for j in range(h):
            if chain[j] == nxt:
                return h, STATUS_CYCLE
        if h >= max_chain:
            return h, STATUS_CAP
        chain[h] = nxt
        cur = nxt
        h += 1


@njit(**_JIT)
def _rk4_advance(x, xd, centers, radii, gamma, ang_tol, max_chain,
                 dt_eff, k1, chain, controls, scratch, xout):
    """Stages 2-4 of a classical RK4 step given the base slope k1.

    scratch must be at least (4, n); chain/controls are reused stage
    buffers.  Returns a status code; xout receives the new state.
    """
    n = x.shape[0]
    xs = scratch[0]
    k2 = scratch[1]
    k3 = scratch[2]
    k4 = scratch[3]
    for j in range(n):
        xs[j] = x[j] + 0.5 * dt_eff * k1[j]
    h, st = _control(xs, xd, centers, radii, gamma, ang_tol, max_chain,
                     chain, controls)
    if st != STATUS_OK:
        return st
    for j in range(n):
        k2[j] = controls[h, j]
        xs[j] = x[j] + 0.5 * dt_eff * k2[j]
    h, st = _control(xs, xd, centers, radii, gamma, ang_tol, max_chain,
                     chain, controls)
    if st != STATUS_OK:
        return st
    for j in range(n):
        k3[j] = controls[h, j]
        xs[j] = x[j] + dt_eff * k3[j]
    h, st = _control(xs, xd, centers, radii, gamma, ang_tol, max_chain,
                     chain, controls)
    if st != STATUS_OK:
        return st
    for j in range(n):
        k4[j] = controls[h, j]
        xout[j] = x[j] + dt_eff * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
    return STATUS_OK


@njit(**_JIT)
def _effective_dt(speed, dt, clearance, conv_tol, step_cap):
    """Shorten the step so displacement stays below a clearance fraction."""
    cap_len = step_cap * max(clearance, conv_tol)
    if speed > 0.0 and speed * dt > cap_len:
        return cap_len / speed
    return dt


@njit(**_JIT)
def _single_step(x, xd, centers, radii, r0, gamma, ang_tol, max_chain,
                 dt, conv_tol, step_cap, xout):
    """One monitored RK4 step.  Returns (dt_eff, status)."""
    n = x.shape[0]
    mc = max(max_chain, 1)
    chain = np.zeros(mc, np.int64)
    controls = np.empty((mc + 1, n))
    scratch = np.empty((4, n))
    h, st = _control(x, xd, centers, radii, gamma, ang_tol, max_chain,
                     chain, controls)
    if st != STATUS_OK:
        for j in range(n):
            xout[j] = x[j]
        return 0.0, st
    k1 = np.empty(n)
    speed2 = 0.0
    for j in range(n):
        k1[j] = controls[h, j]
        speed2 += k1[j] * k1[j]
    clr = _clearance(x, centers, radii, r0)
    dt_eff = _effective_dt(math.sqrt(speed2), dt, clr, conv_tol, step_cap)
    st = _rk4_advance(x, xd, centers, radii, gamma, ang_tol, max_chain,
                      dt_eff, k1, chain, controls, scratch, xout)
    if st != STATUS_OK:
        for j in range(n):
            xout[j] = x[j]
        return 0.0, st
    return dt_eff, STATUS_OK


@njit(**_JIT)
def _integrate(x0, xd, centers, radii, r0, gamma, ang_tol, max_chain,
               dt, t_max, conv_tol, stall_tol, stall_window, safety_tol,
               step_cap, max_steps):
    """Closed-loop integration of xdot = u(x) with safety, convergence and
    stall monitors.

    Returns (outcome, nrec, path_length, min_clearance, ts, xs, us,
    chain_lens, chain_mat); the recorded samples are ts[:nrec] etc.
    """
    n = x0.shape[0]
    mc = max(max_chain, 1)
    cap = max_steps + 2
    ts = np.empty(cap)
    xs = np.empty((cap, n))
    us = np.empty((cap, n))
    ch_len = np.zeros(cap, np.int64)
    ch_mat = np.zeros((cap, mc), np.int64)
    chain = np.zeros(mc, np.int64)
    controls = np.empty((mc + 1, n))
    scratch = np.empty((4, n))
    xnew = np.empty(n)
    x = x0.copy()
    t = 0.0
    path = 0.0
    minclr = 1e300
    stall = 0.0
    nrec = 0
    outcome = OUT_TIMEOUT
    while True:
        h, st = _control(x, xd, centers, radii, gamma, ang_tol, max_chain,
                         chain, controls)
        ts[nrec] = t
        for j in range(n):
            xs[nrec, j] = x[j]
            us[nrec, j] = controls[h, j]
        ch_len[nrec] = h
        for j in range(h):
            ch_mat[nrec, j] = chain[j]
        nrec += 1
        if st != STATUS_OK:
            outcome = OUT_DIAGNOSTIC
            break
        clr = _clearance(x, centers, radii, r0)
        if clr < minclr:
            minclr = clr
        if clr < -safety_tol:
            outcome = OUT_UNSAFE
            break
        dist = 0.0
        for j in range(n):
            d = x[j] - xd[j]
            dist += d * d
        dist = math.sqrt(dist)
        if dist <= conv_tol:
            outcome = OUT_CONVERGED
            break
        if t >= t_max:
            outcome = OUT_TIMEOUT
            break
        if nrec > max_steps:
            outcome = OUT_TIMEOUT
            break
        speed2 = 0.0
        for j in range(n):
            speed2 += us[nrec - 1, j] * us[nrec - 1, j]
        speed = math.sqrt(speed2)
        dt_eff = _effective_dt(speed, dt, clr, conv_tol, step_cap)
        if speed <= stall_tol and dist > 10.0 * conv_tol:
            stall += dt_eff
            if stall >= stall_window:
                outcome = OUT_STALLED
                break
        else:
            stall = 0.0
        st = _rk4_advance(x, xd, centers, radii, gamma, ang_tol, max_chain,
                          dt_eff, us[nrec - 1], chain, controls, scratch, xnew)
        if st != STATUS_OK:
            outcome = OUT_DIAGNOSTIC
            break
        seg = 0.0
        for j in range(n):
            d = xnew[j] - x[j]
            seg += d * d
            x[j] = xnew[j]
        path += math.sqrt(seg)
        t += dt_eff
    return outcome, nrec, path, minclr, ts, xs, us, ch_len, ch_mat
