"""Compiled kernels for serial-arm kinematics.

Everything here operates on packed float64 arrays (no Python objects) so the
damped-least-squares solver and the reachability grid sweep run at C speed.
The public API lives in :mod:`dyngrasp.kinematics`; these kernels are an
implementation detail.

Packed arm layout (N revolute joints):
  rots   (N+1, 3, 3)  fixed rotation of each joint frame; slot N is the tool
  trans  (N+1, 3)     fixed translation of each joint frame; slot N is the tool
  axes   (N, 3)       unit rotation axis of each joint, local frame
  lower, upper (N,)   joint limits, radians
"""

import numpy as np
from numba import njit, prange

F8 = np.float64


@njit(cache=True)
def _axis_rot(axis, angle, out):
    """Rodrigues rotation about a unit axis, written into out (3x3)."""
    x, y, z = axis[0], axis[1], axis[2]
    c = np.cos(angle)
    s = np.sin(angle)
    t = 1.0 - c
    out[0, 0] = t * x * x + c
    out[0, 1] = t * x * y - s * z
    out[0, 2] = t * x * z + s * y
    out[1, 0] = t * x * y + s * z
    out[1, 1] = t * y * y + c
    out[1, 2] = t * y * z - s * x
    out[2, 0] = t * x * z - s * y
    out[2, 1] = t * y * z + s * x
    out[2, 2] = t * z * z + c


@njit(cache=True)
def quat_to_mat(q):
    """Unit quaternion (w,x,y,z) to rotation matrix."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    m = np.empty((3, 3), dtype=F8)
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


@njit(cache=True)
def mat_to_quat(m):
    """Rotation matrix to unit quaternion (w,x,y,z), w >= 0."""
    q = np.empty(4, dtype=F8)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q[0] = 0.25 * s
        q[1] = (m[2, 1] - m[1, 2]) / s
        q[2] = (m[0, 2] - m[2, 0]) / s
        q[3] = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q[0] = (m[2, 1] - m[1, 2]) / s
        q[1] = 0.25 * s
        q[2] = (m[0, 1] + m[1, 0]) / s
        q[3] = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q[0] = (m[0, 2] - m[2, 0]) / s
        q[1] = (m[0, 1] + m[1, 0]) / s
        q[2] = 0.25 * s
        q[3] = (m[2, 1] + m[1, 2]) / s
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q[0] = (m[1, 0] - m[0, 1]) / s
        q[1] = (m[0, 2] + m[2, 0]) / s
        q[2] = (m[2, 1] + m[1, 2]) / s
        q[3] = 0.25 * s
    n = np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    for i in range(4):
        q[i] /= n
    if q[0] < 0.0:
        for i in range(4):
            q[i] = -q[i]
    return q


@njit(cache=True)
def _rot_diff_vec(r_target, r_cur, out):
    """Rotation vector (axis*angle) taking r_cur to r_target, world frame."""
    # e = log(R_target R_cur^T)
    r = np.empty((3, 3), dtype=F8)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += r_target[i, k] * r_cur[j, k]
            r[i, j] = acc
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    c = 0.5 * (tr - 1.0)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    angle = np.arccos(c)
    if angle < 1e-12:
        out[0] = 0.5 * (r[2, 1] - r[1, 2])
        out[1] = 0.5 * (r[0, 2] - r[2, 0])
        out[2] = 0.5 * (r[1, 0] - r[0, 1])
        return angle
    if angle > np.pi - 1e-6:
        # near pi: extract axis from the symmetric part
        ax = np.sqrt(max(0.0, (r[0, 0] + 1.0) * 0.5))
        ay = np.sqrt(max(0.0, (r[1, 1] + 1.0) * 0.5))
        az = np.sqrt(max(0.0, (r[2, 2] + 1.0) * 0.5))
        if ax >= ay and ax >= az:
            if ax < 1e-9:
                ax = 1e-9
            ay = (r[0, 1] + r[1, 0]) / (4.0 * ax)
            az = (r[0, 2] + r[2, 0]) / (4.0 * ax)
        elif ay >= az:
            if ay < 1e-9:
                ay = 1e-9
            ax = (r[0, 1] + r[1, 0]) / (4.0 * ay)
            az = (r[1, 2] + r[2, 1]) / (4.0 * ay)
        else:
            if az < 1e-9:
                az = 1e-9
            ax = (r[0, 2] + r[2, 0]) / (4.0 * az)
            ay = (r[1, 2] + r[2, 1]) / (4.0 * az)
        n = np.sqrt(ax * ax + ay * ay + az * az)
        out[0] = angle * ax / n
        out[1] = angle * ay / n
        out[2] = angle * az / n
        return angle
    s = 2.0 * np.sin(angle)
    out[0] = angle * (r[2, 1] - r[1, 2]) / s
    out[1] = angle * (r[0, 2] - r[2, 0]) / s
    out[2] = angle * (r[1, 0] - r[0, 1]) / s
    return angle


@njit(cache=True)
def fk_frames(rots, trans, axes, q, out_pos, out_rot):
    """All joint-frame origins/orientations plus the tool frame.

    out_pos: (N+2, 3) origins -- base, each joint frame (post fixed transform,
    pre own rotation has the same origin), tool.
    out_rot: (N+2, 3, 3) orientations after each joint's rotation.
    Row 0 is the base frame; row i+1 is after joint i; row N+1 is the tool.
    """
    n = axes.shape[0]
    rj = np.empty((3, 3), dtype=F8)
    cur_r = np.eye(3)
    cur_p = np.zeros(3)
    out_pos[0] = cur_p
    out_rot[0] = cur_r
    for i in range(n):
        # fixed transform
        new_p = cur_p + cur_r @ trans[i]
        new_r = cur_r @ rots[i]
        # joint rotation about local axis
        _axis_rot(axes[i], q[i], rj)
        new_r = new_r @ rj
        cur_p = new_p
        cur_r = new_r
        out_pos[i + 1] = cur_p
        out_rot[i + 1] = cur_r
    # tool
    out_pos[n + 1] = cur_p + cur_r @ trans[n]
    out_rot[n + 1] = cur_r @ rots[n]


@njit(cache=True)
def fk_pose(rots, trans, axes, q):
    """Tool position and rotation matrix for configuration q."""
    n = axes.shape[0]
    pos = np.empty((n + 2, 3), dtype=F8)
    rot = np.empty((n + 2, 3, 3), dtype=F8)
    fk_frames(rots, trans, axes, q, pos, rot)
    return pos[n + 1], rot[n + 1]


@njit(cache=True)
def jacobian(rots, trans, axes, q):
    """Geometric Jacobian (6xN): rows 0-2 linear, 3-5 angular."""
    n = axes.shape[0]
    pos = np.empty((n + 2, 3), dtype=F8)
    rot = np.empty((n + 2, 3, 3), dtype=F8)
    fk_frames(rots, trans, axes, q, pos, rot)
    pe = pos[n + 1]
    jac = np.empty((6, n), dtype=F8)
    for i in range(n):
        # world-frame joint axis: orientation after joint i includes its own
        # rotation, which leaves the axis itself invariant
        z = rot[i + 1] @ axes[i]
        o = pos[i + 1]
        dx = pe[0] - o[0]
        dy = pe[1] - o[1]
        dz = pe[2] - o[2]
        jac[0, i] = z[1] * dz - z[2] * dy
        jac[1, i] = z[2] * dx - z[0] * dz
        jac[2, i] = z[0] * dy - z[1] * dx
        jac[3, i] = z[0]
        jac[4, i] = z[1]
        jac[5, i] = z[2]
    return jac


@njit(cache=True)
def _splitmix64(state):
    """One step of splitmix64; returns (new_state, uniform in [0,1))."""
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = z ^ (z >> np.uint64(31))
    return state, (np.float64(z >> np.uint64(11))) / 9007199254740992.0


@njit(cache=True)
def dls_ik(rots, trans, axes, lower, upper, target_pos, target_rot, q_seed,
           has_seed, tol_pos, tol_ang, max_iters, max_restarts, damping,
           step_clamp, rng_state):
    """Damped-least-squares IK with random restarts.

    Returns (q, ok, restarts_used). Restart 0 starts from q_seed when
    has_seed, otherwise from a random config. Stalls (no meaningful residual
    decrease over 10 iterations) abort a restart early.
    """
    n = axes.shape[0]
    q = np.empty(n, dtype=F8)
    e = np.empty(6, dtype=F8)
    erot = np.empty(3, dtype=F8)
    pos = np.empty((n + 2, 3), dtype=F8)
    rot = np.empty((n + 2, 3, 3), dtype=F8)
    lam2 = damping * damping
    for restart in range(max_restarts):
        if restart == 0 and has_seed:
            for i in range(n):
                q[i] = min(max(q_seed[i], lower[i]), upper[i])
        else:
            for i in range(n):
                rng_state, u = _splitmix64(rng_state)
                q[i] = lower[i] + u * (upper[i] - lower[i])
        best = 1e30
        stall = 0
        for _ in range(max_iters):
            fk_frames(rots, trans, axes, q, pos, rot)
            pe = pos[n + 1]
            re = rot[n + 1]
            e[0] = target_pos[0] - pe[0]
            e[1] = target_pos[1] - pe[1]
            e[2] = target_pos[2] - pe[2]
            ang = _rot_diff_vec(target_rot, re, erot)
            e[3] = erot[0]
            e[4] = erot[1]
            e[5] = erot[2]
            dp = np.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
            if dp <= tol_pos and ang <= tol_ang:
                return q, True, restart
            resid = dp + 0.25 * ang
            if resid < best - 1e-10:
                best = resid
                stall = 0
            else:
                stall += 1
                if stall >= 12:
                    # plateau: kick the configuration rather than burn a
                    # whole restart; full restarts handle the rest
                    for i in range(n):
                        rng_state, u = _splitmix64(rng_state)
                        q[i] += (u - 0.5) * 1.4
                        if q[i] < lower[i]:
                            q[i] = lower[i]
                        elif q[i] > upper[i]:
                            q[i] = upper[i]
                    best = 1e30
                    stall = 0
                    continue
            jac = np.empty((6, n), dtype=F8)
            for i in range(n):
                z = rot[i + 1] @ axes[i]
                o = pos[i + 1]
                dx = pe[0] - o[0]
                dy = pe[1] - o[1]
                dz = pe[2] - o[2]
                jac[0, i] = z[1] * dz - z[2] * dy
                jac[1, i] = z[2] * dx - z[0] * dz
                jac[2, i] = z[0] * dy - z[1] * dx
                jac[3, i] = z[0]
                jac[4, i] = z[1]
                jac[5, i] = z[2]
            a = jac @ jac.T
            for i in range(6):
                a[i, i] += lam2
            y = np.linalg.solve(a, e)
            dq = jac.T @ y
            for i in range(n):
                if dq[i] > step_clamp:
                    dq[i] = step_clamp
                elif dq[i] < -step_clamp:
                    dq[i] = -step_clamp
                q[i] += dq[i]
                if q[i] < lower[i]:
                    q[i] = lower[i]
                elif q[i] > upper[i]:
                    q[i] = upper[i]
        # next restart
    return q, False, max_restarts


@njit(cache=True, parallel=True)
def reach_grid_occupancy(rots, trans, axes, lower, upper, centers, bin_rots,
                         max_reach, tol_pos, tol_ang, max_iters, restarts,
                         damping, step_clamp, base_seed):
    """Occupancy over (cell, orientation-bin) pairs.

    centers: (M,3) cell centers; bin_rots: (K,3,3). Cells beyond max_reach of
    the base skip IK. Deterministic: the RNG stream of each (cell, bin) is
    derived from base_seed and its indices, independent of thread schedule.
    """
    m = centers.shape[0]
    k = bin_rots.shape[0]
    occ = np.zeros((m, k), dtype=np.uint8)
    for ci in prange(m):
        c = centers[ci]
        d = np.sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2])
        if d > max_reach:
            continue
        qdummy = np.zeros(axes.shape[0], dtype=F8)
        for bi in range(k):
            state = (np.uint64(base_seed) ^ (np.uint64(ci) * np.uint64(0x100000001B3))
                     ^ (np.uint64(bi) * np.uint64(0x1000193)))
            _, ok, _ = dls_ik(rots, trans, axes, lower, upper, c, bin_rots[bi],
                              qdummy, False, tol_pos, tol_ang, max_iters,
                              restarts, damping, step_clamp, state)
            if ok:
                occ[ci, bi] = 1
    return occ
