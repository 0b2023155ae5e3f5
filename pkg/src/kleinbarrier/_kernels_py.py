"""Pure numpy twin of the compiled stepping core (same signature and results)."""

import numpy as np


def _derivative(f, inv12h):
    return (-np.roll(f, -2) + 8.0 * np.roll(f, -1) - 8.0 * np.roll(f, 1) + np.roll(f, 2)) * inv12h


def _norm2(u, w):
    return float(np.vdot(u, u).real + np.vdot(w, w).real)


def taylor_steps(u, w, v, h, dt, mass, n_steps, tol, n_max, strang, mask):
    n = u.shape[0]
    inv12h = 1.0 / (12.0 * h)
    tol2 = tol * tol / h
    use_mask = mask.shape[0] == n
    max_drift, max_used, converged, absorbed = 0.0, 0, True, 0.0
    half = np.exp(-0.5j * mass * dt)
    full = np.exp(-1j * mass * dt)
    for _ in range(n_steps):
        before = _norm2(u, w)
        if strang:
            u *= half
            w *= np.conj(half)
        tu, tw = u.copy(), w.copy()
        used = n_max
        for k in range(1, n_max + 1):
            factor = -1j * dt / k
            nu = factor * (v * tu + _derivative(tw, inv12h))
            nw = factor * (v * tw - _derivative(tu, inv12h))
            u += nu
            w += nw
            tu, tw = nu, nw
            if _norm2(nu, nw) < tol2:
                used = k
                break
        else:
            converged = False
        max_used = max(max_used, used)
        phase = half if strang else full
        u *= phase
        w *= np.conj(phase)
        after = _norm2(u, w)
        max_drift = max(max_drift, abs(after - before) * h)
        if use_mask:
            u *= mask
            w *= mask
            absorbed += (after - _norm2(u, w)) * h
    return max_drift, max_used, converged, absorbed
