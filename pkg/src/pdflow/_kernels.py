"""
Stepping loops shared by the interpreted and the compiled integrators.

Everything here is written in the numba-compatible subset of Python, with
explicit element loops and preallocated buffers so that the compiled version
does not allocate inside the time loop.  The loops take the right-hand side
``rhs(t, y, P, out)`` and the running-integral integrand ``g(t, y, P, out)``
as arguments.  For convex quadratics both are the compiled `quad_rhs` /
`quad_integrand` below; for arbitrary oracles they are Python callables and
the loops run uncompiled.

Status codes: 0 completed, 1 blew up, 2 step underflow, 3 step limit.
"""

import types

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

OK, BLEW_UP, UNDERFLOW, LIMIT = 0, 1, 2, 3

SCHEDULE_CODES = {"constant": 0, "exponential": 1, "polynomial": 2}
PERTURBATION_CODES = {"zero": 0, "power_decay": 1, "exponential_decay": 2}


def _grow_rows(buf, count):
    out = np.empty((2 * buf.shape[0], buf.shape[1]))
    out[:count] = buf[:count]
    return out


def _grow_vec(buf, count):
    out = np.empty(2 * buf.shape[0])
    out[:count] = buf[:count]
    return out


def _thin(ts, ys, accs, count):
    # keep samples 0, 2, 4, ... and always the most recent one
    k = 0
    for j in range(0, count, 2):
        ts[k] = ts[j]
        ys[k] = ys[j]
        accs[k] = accs[j]
        k += 1
    if (count - 1) % 2 != 0:
        ts[k] = ts[count - 1]
        ys[k] = ys[count - 1]
        accs[k] = accs[count - 1]
        k += 1
    return k


def _max_abs(y):
    # returns inf as soon as a non-finite entry shows up
    out = 0.0
    for i in range(y.shape[0]):
        a = abs(y[i])
        if not a <= 1.7976931348623157e308:
            return np.inf
        if a > out:
            out = a
    return out


def _accumulate(g, P, t, h, y0, y1, f0, f1, y_mid, g_old, g_mid, g_new, acc):
    """Add ``int_t^{t+h} g`` to ``acc`` by Simpson's rule.

    The midpoint state is the cubic Hermite interpolant through ``(y0, f0)``
    and ``(y1, f1)``, so the rule is fourth order without extra right-hand
    side evaluations.  ``g_new`` is moved into ``g_old`` afterwards.
    """
    for i in range(y0.shape[0]):
        y_mid[i] = 0.5 * (y0[i] + y1[i]) + (0.125 * h) * (f0[i] - f1[i])
    g(t + 0.5 * h, y_mid, P, g_mid)
    g(t + h, y1, P, g_new)
    w = h / 6.0
    for i in range(acc.shape[0]):
        acc[i] += w * (g_old[i] + 4.0 * g_mid[i] + g_new[i])
        g_old[i] = g_new[i]


def rk4_loop(rhs, g, P, y0, n_acc, t0, T, h, n_steps, stride, blowup):
    """Classical RK4 on the uniform grid ``t0 + k h`` (last step ends at T)."""
    N = y0.shape[0]
    y = y0.copy()
    stg = np.empty(N)
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    acc = np.zeros(n_acc)
    g_old = np.empty(n_acc)
    g_mid = np.empty(n_acc)
    g_new = np.empty(n_acc)
    g(t0, y, P, g_old)
    rhs(t0, y, P, k1)
    cap = n_steps // stride + 2
    ts = np.empty(cap)
    ys = np.empty((cap, N))
    accs = np.empty((cap, n_acc))
    ts[0] = t0
    ys[0] = y
    accs[0] = acc
    count = 1
    status = OK
    t = t0
    done = 0
    for k in range(n_steps):
        t_new = T if k == n_steps - 1 else t0 + (k + 1) * h
        hk = t_new - t
        hh = 0.5 * hk
        for i in range(N):
            stg[i] = y[i] + hh * k1[i]
        rhs(t + hh, stg, P, k2)
        for i in range(N):
            stg[i] = y[i] + hh * k2[i]
        rhs(t + hh, stg, P, k3)
        for i in range(N):
            stg[i] = y[i] + hk * k3[i]
        rhs(t_new, stg, P, k4)
        for i in range(N):
            stg[i] = y[i] + (hk / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        if not _max_abs(stg) <= blowup:
            status = BLEW_UP
            break
        rhs(t_new, stg, P, k2)
        _accumulate(g, P, t, hk, y, stg, k1, k2, k3, g_old, g_mid, g_new, acc)
        for i in range(N):
            y[i] = stg[i]
            k1[i] = k2[i]
        t = t_new
        done += 1
        if done % stride == 0 or done == n_steps:
            ts[count] = t
            ys[count] = y
            accs[count] = acc
            count += 1
    if ts[count - 1] != t:
        ts[count] = t
        ys[count] = y
        accs[count] = acc
        count += 1
    return ts[:count].copy(), ys[:count].copy(), accs[:count].copy(), status, t, done, 0


# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40


def dopri_loop(rhs, g, P, y0, n_acc, t0, T, h, atol, rtol, stride, sample_dt, max_samples, max_steps, blowup,
               h_min, h_max):
    """Dormand-Prince 5(4), FSAL, with the PI step-size controller of Hairer & Wanner.

    Samples are kept every ``stride`` accepted steps, or, when ``sample_dt``
    is positive, at the first accepted step past each multiple of
    ``sample_dt``.  Once ``max_samples`` are stored, every other sample is
    dropped and the stride (or interval) doubles.
    """
    safe, fac_lo, fac_hi, beta_pi = 0.9, 0.2, 10.0, 0.04
    expo = 0.2 - 0.75 * beta_pi
    N = y0.shape[0]
    y = y0.copy()
    y_new = np.empty(N)
    stg = np.empty(N)
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    k5 = np.empty(N)
    k6 = np.empty(N)
    k7 = np.empty(N)
    acc = np.zeros(n_acc)
    g_old = np.empty(n_acc)
    g_mid = np.empty(n_acc)
    g_new = np.empty(n_acc)
    g(t0, y, P, g_old)
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, N))
    accs = np.empty((cap, n_acc))
    ts[0] = t0
    ys[0] = y
    accs[0] = acc
    count = 1
    status = OK
    n_ok = 0
    n_rej = 0
    err_old = 1e-4
    last_rejected = False
    next_sample = t0 + sample_dt
    h = min(h, h_max)
    t = t0
    rhs(t, y, P, k1)
    while t < T:
        if n_ok + n_rej >= max_steps:
            status = LIMIT
            break
        if h < h_min:
            status = UNDERFLOW
            break
        last = t + 1.01 * h >= T
        if last:
            h = T - t
        for i in range(N):
            stg[i] = y[i] + h * (_A21 * k1[i])
        rhs(t + _C2 * h, stg, P, k2)
        for i in range(N):
            stg[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        rhs(t + _C3 * h, stg, P, k3)
        for i in range(N):
            stg[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs(t + _C4 * h, stg, P, k4)
        for i in range(N):
            stg[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        rhs(t + _C5 * h, stg, P, k5)
        for i in range(N):
            stg[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
        t_new = T if last else t + h
        rhs(t_new, stg, P, k6)
        for i in range(N):
            y_new[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        rhs(t_new, y_new, P, k7)
        err = 0.0
        for i in range(N):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            err += (e / sc) ** 2
        err = np.sqrt(err / N)
        if not err < 1e10:
            err = 1e10
        fac11 = err ** expo
        if err <= 1.0:
            if not _max_abs(y_new) <= blowup:
                status = BLEW_UP
                break
            fac = fac11 / err_old ** beta_pi
            fac = max(1.0 / fac_hi, min(1.0 / fac_lo, fac / safe))
            h_new = min(h / fac, h_max)
            if last_rejected:
                h_new = min(h_new, h)
            err_old = max(err, 1e-4)
            _accumulate(g, P, t, t_new - t, y, y_new, k1, k7, stg, g_old, g_mid, g_new, acc)
            for i in range(N):
                y[i] = y_new[i]
                k1[i] = k7[i]
            t = t_new
            n_ok += 1
            last_rejected = False
            if sample_dt > 0.0:
                keep = t >= next_sample
                while next_sample <= t:
                    next_sample += sample_dt
            else:
                keep = n_ok % stride == 0
            if keep or t >= T:
                if count >= max_samples:
                    count = _thin(ts, ys, accs, count)
                    stride *= 2
                    sample_dt *= 2.0
                if count >= ts.shape[0]:
                    ts = _grow_vec(ts, count)
                    ys = _grow_rows(ys, count)
                    accs = _grow_rows(accs, count)
                ts[count] = t
                ys[count] = y
                accs[count] = acc
                count += 1
            h = h_new
        else:
            h = h / min(1.0 / fac_lo, fac11 / safe)
            n_rej += 1
            last_rejected = True
    if ts[count - 1] != t:
        if count >= ts.shape[0]:
            ts = _grow_vec(ts, count)
            ys = _grow_rows(ys, count)
            accs = _grow_rows(accs, count)
        ts[count] = t
        ys[count] = y
        accs[count] = acc
        count += 1
    return ts[:count].copy(), ys[:count].copy(), accs[:count].copy(), status, t, n_ok, n_rej


# -- quadratic problems: f(x) = x'Qx/2 + c'x -------------------------------
#
# All data travels in one flat float64 buffer.  Passing a tuple of arrays
# instead costs a reference-count round trip per array on every call, which
# dominated the step cost for small problems.
#
#   [0] n  [1] m  [2:6] gamma, delta, sigma, f(x*)
#   [6:10]  schedule code, beta0, rate, t0
#   [10:16] perturbation code, eps0, power, rate, direction, t0
#   [16:]   Q (n*n, row-major), c, A (m*n, row-major), b, x*, lambda*, scratch (m)

_HEAD = 16


def pack_quadratic(Q, c, A, b, dpar, spar, epar, xs, ls):
    n, m = c.shape[0], b.shape[0]
    head = np.zeros(_HEAD)
    head[0], head[1] = n, m
    head[2:6] = dpar
    head[6:10] = spar
    head[10:16] = epar
    return np.concatenate([head, np.ravel(Q), c, np.ravel(A), b, xs, ls, np.zeros(m)])


def _offsets(n, m):
    oc = _HEAD + n * n
    oA = oc + n
    ob = oA + m * n
    oxs = ob + m
    ols = oxs + n
    return oc, oA, ob, oxs, ols, ols + m


def beta_value(P, t):
    code, b0, r, t0 = P[6], P[7], P[8], P[9]
    if code == 0:
        return b0
    if code == 1:
        return b0 * np.exp(r * (t - t0))
    return b0 * (t / t0) ** r


def beta_dot_value(P, t):
    code, b0, r, t0 = P[6], P[7], P[8], P[9]
    if code == 0:
        return 0.0
    if code == 1:
        return r * (b0 * np.exp(r * (t - t0)))
    return r * b0 * t ** (r - 1.0) / t0 ** r


def eps_profile(P, t):
    """Signed scalar profile; the perturbation is profile * e_direction."""
    code, e0, power, rate, t0 = P[10], P[11], P[12], P[13], P[15]
    if code == 0:
        return 0.0
    sign = 1.0 if e0 >= 0 else -1.0
    if code == 1:
        return sign * (abs(e0) * (1.0 + (t - t0)) ** (-power))
    return sign * (abs(e0) * np.exp(-rate * (t - t0)))


def quad_rhs(t, y, P, out):
    n = int(P[0])
    m = int(P[1])
    gamma, delta, sigma = P[2], P[3], P[4]
    oc, oA, ob, oxs, ols, ow = _offsets(n, m)
    bt = beta_value(P, t)
    for i in range(m):
        r = -P[ob + i]
        av = 0.0
        for j in range(n):
            a = P[oA + i * n + j]
            r += a * y[j]
            av += a * y[n + j]
        out[2 * n + i] = bt * (r + delta * av)
        P[ow + i] = y[2 * n + i] + sigma * r
    for j in range(n):
        s = P[oc + j]
        for k in range(n):
            s += P[_HEAD + j * n + k] * y[k]
        for i in range(m):
            s += P[oA + i * n + j] * P[ow + i]
        out[j] = y[n + j]
        out[n + j] = -gamma * y[n + j] - bt * s
    if P[10] != 0:
        out[n + int(P[14])] += eps_profile(P, t)


def quad_integrand(t, y, P, out):
    n = int(P[0])
    m = int(P[1])
    delta, sigma, f_star = P[3], P[4], P[5]
    oc, oA, ob, oxs, ols, ow = _offsets(n, m)
    bt = beta_value(P, t)
    w = (1.0 / delta) * bt - beta_dot_value(P, t)
    rr = 0.0
    lr = 0.0
    for i in range(m):
        r = -P[ob + i]
        for j in range(n):
            r += P[oA + i * n + j] * y[j]
        out[n + 1 + i] = w * r
        rr += r * r
        lr += P[ols + i] * r
    fx = 0.0
    vv = 0.0
    for j in range(n):
        qx = 0.0
        for k in range(n):
            qx += P[_HEAD + j * n + k] * y[k]
        fx += y[j] * (0.5 * qx + P[oc + j])
        vv += y[n + j] * y[n + j]
        out[j] = y[j]
    out[n] = 0.0
    if P[10] != 0:
        j = int(P[14])
        out[n] = ((1.0 / delta) * (y[j] - P[oxs + j]) + y[n + j]) * eps_profile(P, t)
    out[n + 1 + m] = bt * rr
    out[n + 2 + m] = vv
    out[n + 3 + m] = w * (fx - f_star + lr + 0.5 * sigma * rr)


def _compile_all():
    """Compiled twins of the loops and quadratic kernels.

    The Python functions above stay uncompiled so that the interpreted loops
    can call Python oracles; the twins are rebuilt over a namespace where
    every helper is its jitted version.
    """
    jit = njit(cache=True)
    ns = dict(globals())
    out = {}
    for name in ("_grow_rows", "_grow_vec", "_thin", "_max_abs", "_accumulate", "_offsets", "beta_value",
                 "beta_dot_value", "eps_profile", "quad_rhs", "quad_integrand", "rk4_loop", "dopri_loop"):
        fn = globals()[name]
        ns[name] = out[name] = jit(types.FunctionType(fn.__code__, ns, fn.__name__, fn.__defaults__))
    return out


if HAVE_NUMBA:
    compiled = _compile_all()
    quad_rhs_compiled = compiled["quad_rhs"]
    quad_integrand_compiled = compiled["quad_integrand"]
    rk4_compiled = compiled["rk4_loop"]
    dopri_compiled = compiled["dopri_loop"]
else:  # pragma: no cover
    quad_rhs_compiled, quad_integrand_compiled = quad_rhs, quad_integrand
    rk4_compiled, dopri_compiled = rk4_loop, dopri_loop
