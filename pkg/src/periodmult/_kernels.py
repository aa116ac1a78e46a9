"""Compiled inner loops: Dormand-Prince 5(4) with PI step control."""

import numpy as np
from numba import njit

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

STATUS_DONE = 0
STATUS_MAX_STEPS = 1
STATUS_UNDERFLOW = 2
STATUS_CAPTURED = 3


@njit(cache=True, nogil=True)
def rhs(a, t, delta, gamma1, alpha, eps, n, zeta, probe_det):
    ac = a.conjugate()
    p = 1.0 + 0j
    for _ in range(n - 1):
        p *= ac
    u = a.real * a.real + a.imag * a.imag
    out = 1j * (delta + 1j * gamma1 + alpha * u) * a + 1j * eps * p
    if zeta != 0:
        out += 1j * zeta * np.exp(-1j * probe_det * t)
    return out


@njit(cache=True, nogil=True)
def _norm(e, y0, y1, rtol, atol):
    sr = atol + rtol * max(abs(y0.real), abs(y1.real))
    si = atol + rtol * max(abs(y0.imag), abs(y1.imag))
    return np.sqrt(0.5 * ((e.real / sr) ** 2 + (e.imag / si) ** 2))


@njit(cache=True, nogil=True)
def dopri5(a0, t0, t_final, rtol, atol, h0, delta, gamma1, alpha, eps, n, zeta, probe_det,
           max_steps, store, stop_points, stop_radius):
    """Integrate from t0 to t_final.

    Returns (ts, ys, n_accepted, n_rejected, status, capture_index). When
    ``store`` is False only the initial and final states are kept. The run
    stops early with STATUS_CAPTURED once the state comes within
    ``stop_radius`` of any entry of ``stop_points``.
    """
    cap = max_steps + 1 if store else 2
    ts = np.empty(cap)
    ys = np.empty(cap, dtype=np.complex128)
    ts[0] = t0
    ys[0] = a0
    k = 1

    t = t0
    y = a0
    f1 = rhs(y, t, delta, gamma1, alpha, eps, n, zeta, probe_det)
    span = t_final - t0
    h = h0
    if h <= 0:
        scale = atol + rtol * abs(y)
        d0 = abs(y) / scale
        d1 = abs(f1) / scale
        if d0 < 1e-5 or d1 < 1e-5:
            h = 1e-6
        else:
            h = 0.01 * d0 / d1
        h = min(h, span)

    facold = 1e-4
    beta = 0.04
    expo1 = 0.2 - beta * 0.75
    safe = 0.9
    n_acc = 0
    n_rej = 0
    status = STATUS_DONE
    captured = -1
    last_reject = False

    for j in range(stop_points.shape[0]):
        if abs(y - stop_points[j]) < stop_radius:
            status = STATUS_CAPTURED
            captured = j
    if status == STATUS_CAPTURED:
        return ts[:1], ys[:1], 0, 0, status, captured

    while t < t_final:
        if n_acc >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 1e-14 * max(abs(t), span):
            status = STATUS_UNDERFLOW
            break
        final_step = False
        if t + h >= t_final:
            h = t_final - t
            final_step = True

        f2 = rhs(y + h * A21 * f1, t + C2 * h, delta, gamma1, alpha, eps, n, zeta, probe_det)
        f3 = rhs(y + h * (A31 * f1 + A32 * f2), t + C3 * h,
                 delta, gamma1, alpha, eps, n, zeta, probe_det)
        f4 = rhs(y + h * (A41 * f1 + A42 * f2 + A43 * f3), t + C4 * h,
                 delta, gamma1, alpha, eps, n, zeta, probe_det)
        f5 = rhs(y + h * (A51 * f1 + A52 * f2 + A53 * f3 + A54 * f4), t + C5 * h,
                 delta, gamma1, alpha, eps, n, zeta, probe_det)
        f6 = rhs(y + h * (A61 * f1 + A62 * f2 + A63 * f3 + A64 * f4 + A65 * f5), t + h,
                 delta, gamma1, alpha, eps, n, zeta, probe_det)
        y_new = y + h * (B1 * f1 + B3 * f3 + B4 * f4 + B5 * f5 + B6 * f6)
        f7 = rhs(y_new, t + h, delta, gamma1, alpha, eps, n, zeta, probe_det)
        err_vec = h * (E1 * f1 + E3 * f3 + E4 * f4 + E5 * f5 + E6 * f6 + E7 * f7)
        err = _norm(err_vec, y, y_new, rtol, atol)

        fac11 = err ** expo1
        fac = fac11 / facold ** beta
        fac = max(0.1, min(5.0, fac / safe))
        h_new = h / fac

        if err <= 1.0:
            facold = max(err, 1e-4)
            n_acc += 1
            t = t_final if final_step else t + h
            y = y_new
            f1 = f7
            if store:
                ts[k] = t
                ys[k] = y
                k += 1
            if last_reject:
                h_new = min(h_new, h)
            last_reject = False
            h = h_new
            hit = False
            for j in range(stop_points.shape[0]):
                if abs(y - stop_points[j]) < stop_radius:
                    hit = True
                    captured = j
                    break
            if hit:
                status = STATUS_CAPTURED
                break
        else:
            n_rej += 1
            last_reject = True
            h = h / min(5.0, fac11 / safe)

    if not store:
        ts[1] = t
        ys[1] = y
        k = 2
    return ts[:k], ys[:k], n_acc, n_rej, status, captured
