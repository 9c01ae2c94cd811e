"""Hot numeric kernels with two interchangeable backends.

The inner loops (elliptic integrals, loop-field evaluation, the
velocity-first integrator sweep over a batch of moments) dominate the
runtime of an ensemble, so they are compiled with numba when it is
available.  Setting the environment variable ``SPINCHAOS_PURE_NUMPY=1``
before import selects a vectorised pure-numpy path instead; the same
happens automatically when numba cannot be imported.  The numpy path is
slower but easier to debug and has no compilation latency.

``BACKEND`` reports which path is active.  Both backends implement the
same update rules; binary outcomes of strongly chaotic trajectories may
still differ between them because the two paths round transcendental
functions differently and the dynamics amplifies single-ulp differences.
Within one backend every function here is deterministic and independent
of thread count.
"""

import math
import os
import warnings

import numpy as np

MU_0 = 4.0e-7 * math.pi

_PI = math.pi
_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi

_FORCE_NUMPY = os.environ.get("SPINCHAOS_PURE_NUMPY", "").strip() not in ("", "0")

try:
    if _FORCE_NUMPY:
        raise ImportError("numpy backend forced via SPINCHAOS_PURE_NUMPY")
    from numba import njit, prange, set_num_threads

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    if not _FORCE_NUMPY:
        warnings.warn("numba unavailable; falling back to the pure-numpy kernels")

    def set_num_threads(n):  # noqa: ARG001 - numpy path has no thread pool
        return None


BACKEND = "numba" if HAVE_NUMBA else "numpy"

_AGM_ITMAX = 60


def set_worker_threads(n):
    """Limit kernel parallelism to ``n`` threads (no-op on the numpy path).

    Requests above the launch-time pool size are clamped; results never
    depend on the thread count, only throughput does.
    """
    if HAVE_NUMBA and n is not None and n >= 1:
        import numba

        set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# scalar reference implementations (pure python; also the numpy building
# blocks are written against the exact same recurrences)
# ---------------------------------------------------------------------------

# below this cylindrical radius (in units of the loop radius) the radial
# component switches from the elliptic closed form, which cancels
# catastrophically as rho -> 0, to the two-term axial series
_AXIS_SWITCH = 1e-3


def _ellipke_py(m):
    a = 1.0
    b = math.sqrt(1.0 - m)
    csum = 0.5 * m  # 2^{n-1} c_n^2 accumulated, n = 0 term
    pow2 = 1.0
    for _ in range(_AGM_ITMAX):
        c = 0.5 * (a - b)
        if c == 0.0:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        pow2 *= 2.0
        csum += pow2 * 0.5 * c * c
        if c < 1e-17 * a:
            break
    k = _HALF_PI / a
    return k, k * (1.0 - csum)


def _loop_field_py(x, z, radius, current, cx, cz):
    rho = abs(x - cx)
    dz = z - cz
    r2 = radius * radius
    if rho == 0.0:
        u = r2 + dz * dz
        bz = MU_0 * current * r2 / (2.0 * u * math.sqrt(u))
        return 0.0, bz
    alpha2 = (radius + rho) * (radius + rho) + dz * dz
    beta2 = (radius - rho) * (radius - rho) + dz * dz
    m = 4.0 * radius * rho / alpha2
    kk, ee = _ellipke_py(m)
    pref = MU_0 * current / (_TWO_PI * math.sqrt(alpha2))
    bz = pref * (kk + ee * (r2 - rho * rho - dz * dz) / beta2)
    if rho < _AXIS_SWITCH * radius:
        brho = _brho_axis_series_py(rho, dz, radius, current)
    else:
        brho = pref * (dz / rho) * (-kk + ee * (r2 + rho * rho + dz * dz) / beta2)
    bx = brho if x >= cx else -brho
    return bx, bz


def _brho_axis_series_py(rho, dz, radius, current):
    # B_rho = -(rho/2) B0'(z) + (rho^3/16) B0'''(z) with B0 the on-axis Bz
    r2 = radius * radius
    u = r2 + dz * dz
    u5 = u * u * math.sqrt(u)
    u7 = u5 * u
    u9 = u7 * u
    c0 = MU_0 * current * r2 / 2.0
    d1 = -3.0 * dz / u5
    d3 = 45.0 * dz / u7 - 105.0 * dz * dz * dz / u9
    return c0 * (-0.5 * rho * d1 + rho * rho * rho / 16.0 * d3)


def _step_batch_py(theta, y, drive_k, dt, damping, inv_inertia):
    # one velocity-first step for every moment in the batch
    s = np.sign(_HALF_PI - theta)
    st = np.sin(theta + theta)
    torque = s * drive_k * st * st
    y += dt * ((torque - damping * y) * inv_inertia)
    theta += dt * y
    for _ in range(2):
        mask = theta < 0.0
        if mask.any():
            theta[mask] = -theta[mask]
            y[mask] = -y[mask]
        mask = theta > _PI
        if mask.any():
            theta[mask] = _TWO_PI - theta[mask]
            y[mask] = -y[mask]
    return theta, y


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _ellipke_np(m):
    m = np.asarray(m, dtype=np.float64)
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    csum = 0.5 * m.copy()
    pow2 = 1.0
    for _ in range(_AGM_ITMAX):
        c = 0.5 * (a - b)
        if not (c > 1e-17 * a).any():
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        pow2 *= 2.0
        csum = csum + pow2 * 0.5 * c * c
    k = _HALF_PI / a
    return k, k * (1.0 - csum)


def _loop_field_np(x, z, radius, current, cx, cz):
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    rho = np.abs(x - cx)
    dz = z - cz
    near_axis = rho < _AXIS_SWITCH * radius
    rho_safe = np.where(near_axis, 1.0, rho)
    alpha2 = (radius + rho) ** 2 + dz * dz
    beta2 = (radius - rho) ** 2 + dz * dz
    m = 4.0 * radius * rho / alpha2
    kk, ee = _ellipke_np(m)
    pref = MU_0 * current / (_TWO_PI * np.sqrt(alpha2))
    r2 = radius * radius
    with np.errstate(invalid="ignore", divide="ignore"):
        # beta2 = 0 exactly on the wire; callers mask those points
        bz = pref * (kk + ee * (r2 - rho * rho - dz * dz) / beta2)
        brho = pref * (dz / rho_safe) * (-kk + ee * (r2 + rho * rho + dz * dz) / beta2)
    # axial series where the closed form cancels catastrophically
    u = r2 + dz * dz
    u5 = u * u * np.sqrt(u)
    c0 = MU_0 * current * r2 / 2.0
    d1 = -3.0 * dz / u5
    d3 = 45.0 * dz / (u5 * u) - 105.0 * dz ** 3 / (u5 * u * u)
    brho_series = c0 * (-0.5 * rho * d1 + rho ** 3 / 16.0 * d3)
    bz_axis = c0 / (u * np.sqrt(u))
    bz = np.where(rho == 0.0, bz_axis, bz)
    brho = np.where(near_axis, brho_series, brho)
    bx = np.where(rho == 0.0, 0.0, np.where(x >= cx, brho, -brho))
    return bx, bz


def _field_table_np(x_start, v, dt, n, z0, radius, current, cx, cz):
    t = np.arange(n, dtype=np.float64) * dt
    x = x_start + v * t
    return _loop_field_np(x, np.full(n, z0), radius, current, cx, cz)


def _integrate_run_np(theta0, bx, bz, dt, mu, inertia, damping):
    theta = np.array(theta0, dtype=np.float64, copy=True)
    y = np.zeros_like(theta)
    drive = mu * (bx - bz)
    inv_inertia = 1.0 / inertia
    for k in range(drive.shape[0]):
        _step_batch_py(theta, y, drive[k], dt, damping, inv_inertia)
    return theta, y


def _integrate_path_np(theta0, bx, bz, dt, mu, inertia, damping, stride):
    n = bx.shape[0]
    n_rec = n // stride + 1
    thetas = np.empty(n_rec)
    ys = np.empty(n_rec)
    th = np.array([theta0], dtype=np.float64)
    y = np.zeros(1)
    drive = mu * (bx - bz)
    inv_inertia = 1.0 / inertia
    j = 0
    for k in range(n):
        if k % stride == 0:
            thetas[j] = th[0]
            ys[j] = y[0]
            j += 1
        _step_batch_py(th, y, drive[k], dt, damping, inv_inertia)
    return thetas[:j], ys[:j], th[0], y[0]


def _integrate_const_np(theta0, y0, bx, bz, dt, mu, inertia, damping, n_steps,
                        record_every, velocity_first):
    th, y = theta0, y0
    drive = mu * (bx - bz)
    inv_inertia = 1.0 / inertia
    n_rec = n_steps // record_every + 1
    thetas = np.empty(n_rec)
    ys = np.empty(n_rec)
    j = 0
    for k in range(n_steps):
        if k % record_every == 0:
            thetas[j] = th
            ys[j] = y
            j += 1
        s = 1.0 if th < _HALF_PI else (-1.0 if th > _HALF_PI else 0.0)
        st = math.sin(th + th)
        acc = (s * drive * st * st - damping * y) * inv_inertia
        if velocity_first:
            y += dt * acc
            th += dt * y
        else:
            th += dt * y
            y += dt * acc
        for _ in range(2):
            if th < 0.0:
                th, y = -th, -y
            elif th > _PI:
                th, y = _TWO_PI - th, -y
    return thetas[:j], ys[:j], th, y


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _ellipke_nb(m):
        a = 1.0
        b = math.sqrt(1.0 - m)
        csum = 0.5 * m
        pow2 = 1.0
        for _ in range(_AGM_ITMAX):
            c = 0.5 * (a - b)
            if c == 0.0:
                break
            a, b = 0.5 * (a + b), math.sqrt(a * b)
            pow2 *= 2.0
            csum += pow2 * 0.5 * c * c
            if c < 1e-17 * a:
                break
        k = _HALF_PI / a
        return k, k * (1.0 - csum)

    @njit(cache=True)
    def _loop_field_nb(x, z, radius, current, cx, cz):
        rho = abs(x - cx)
        dz = z - cz
        r2 = radius * radius
        if rho == 0.0:
            u = r2 + dz * dz
            bz = MU_0 * current * r2 / (2.0 * u * math.sqrt(u))
            return 0.0, bz
        alpha2 = (radius + rho) * (radius + rho) + dz * dz
        beta2 = (radius - rho) * (radius - rho) + dz * dz
        m = 4.0 * radius * rho / alpha2
        kk, ee = _ellipke_nb(m)
        pref = MU_0 * current / (_TWO_PI * math.sqrt(alpha2))
        bz = pref * (kk + ee * (r2 - rho * rho - dz * dz) / beta2)
        if rho < _AXIS_SWITCH * radius:
            u = r2 + dz * dz
            u5 = u * u * math.sqrt(u)
            c0 = MU_0 * current * r2 / 2.0
            d1 = -3.0 * dz / u5
            d3 = 45.0 * dz / (u5 * u) - 105.0 * dz * dz * dz / (u5 * u * u)
            brho = c0 * (-0.5 * rho * d1 + rho * rho * rho / 16.0 * d3)
        else:
            brho = pref * (dz / rho) * (-kk + ee * (r2 + rho * rho + dz * dz) / beta2)
        bx = brho if x >= cx else -brho
        return bx, bz

    @njit(cache=True, parallel=True)
    def _field_table_nb(x_start, v, dt, n, z0, radius, current, cx, cz):
        bx = np.empty(n)
        bz = np.empty(n)
        for k in prange(n):
            x = x_start + v * (k * dt)
            bxk, bzk = _loop_field_nb(x, z0, radius, current, cx, cz)
            bx[k] = bxk
            bz[k] = bzk
        return bx, bz

    @njit(cache=True, parallel=True)
    def _integrate_run_nb(theta0, bx, bz, dt, mu, inertia, damping):
        n_ang = theta0.shape[0]
        n = bx.shape[0]
        drive = mu * (bx - bz)
        inv_inertia = 1.0 / inertia
        thf = np.empty(n_ang)
        yf = np.empty(n_ang)
        for a in prange(n_ang):
            th = theta0[a]
            y = 0.0
            for k in range(n):
                s = 1.0 if th < _HALF_PI else (-1.0 if th > _HALF_PI else 0.0)
                st = math.sin(th + th)
                torque = s * drive[k] * st * st
                y += dt * ((torque - damping * y) * inv_inertia)
                th += dt * y
                for _ in range(2):
                    if th < 0.0:
                        th = -th
                        y = -y
                    elif th > _PI:
                        th = _TWO_PI - th
                        y = -y
            thf[a] = th
            yf[a] = y
        return thf, yf

    @njit(cache=True)
    def _integrate_path_nb(theta0, bx, bz, dt, mu, inertia, damping, stride):
        n = bx.shape[0]
        drive = mu * (bx - bz)
        inv_inertia = 1.0 / inertia
        n_rec = n // stride + 1
        thetas = np.empty(n_rec)
        ys = np.empty(n_rec)
        th = theta0
        y = 0.0
        j = 0
        for k in range(n):
            if k % stride == 0:
                thetas[j] = th
                ys[j] = y
                j += 1
            s = 1.0 if th < _HALF_PI else (-1.0 if th > _HALF_PI else 0.0)
            st = math.sin(th + th)
            torque = s * drive[k] * st * st
            y += dt * ((torque - damping * y) * inv_inertia)
            th += dt * y
            for _ in range(2):
                if th < 0.0:
                    th = -th
                    y = -y
                elif th > _PI:
                    th = _TWO_PI - th
                    y = -y
        return thetas[:j], ys[:j], th, y

    @njit(cache=True)
    def _integrate_const_nb(theta0, y0, bx, bz, dt, mu, inertia, damping,
                            n_steps, record_every, velocity_first):
        th = theta0
        y = y0
        drive = mu * (bx - bz)
        inv_inertia = 1.0 / inertia
        n_rec = n_steps // record_every + 1
        thetas = np.empty(n_rec)
        ys = np.empty(n_rec)
        j = 0
        for k in range(n_steps):
            if k % record_every == 0:
                thetas[j] = th
                ys[j] = y
                j += 1
            s = 1.0 if th < _HALF_PI else (-1.0 if th > _HALF_PI else 0.0)
            st = math.sin(th + th)
            acc = (s * drive * st * st - damping * y) * inv_inertia
            if velocity_first:
                y += dt * acc
                th += dt * y
            else:
                th += dt * y
                y += dt * acc
            for _ in range(2):
                if th < 0.0:
                    th, y = -th, -y
                elif th > _PI:
                    th, y = _TWO_PI - th, -y
        return thetas[:j], ys[:j], th, y


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def ellipke(m):
    """Complete elliptic integrals (K, E) for scalar or array modulus m."""
    if np.isscalar(m) or np.ndim(m) == 0:
        if HAVE_NUMBA:
            return _ellipke_nb(float(m))
        return _ellipke_py(float(m))
    return _ellipke_np(m)


def loop_field_values(x, z, radius, current, cx, cz):
    """(Bx, Bz) of a circular loop in its meridian plane, scalar or array."""
    if np.isscalar(x) and np.isscalar(z):
        if HAVE_NUMBA:
            return _loop_field_nb(float(x), float(z), radius, current, cx, cz)
        return _loop_field_py(float(x), float(z), radius, current, cx, cz)
    return _loop_field_np(x, z, radius, current, cx, cz)


def field_table(x_start, v, dt, n, z0, radius, current, cx, cz):
    """Field samples at the n step times of a constant-velocity transit."""
    if HAVE_NUMBA:
        return _field_table_nb(x_start, v, dt, n, z0, radius, current, cx, cz)
    return _field_table_np(x_start, v, dt, n, z0, radius, current, cx, cz)


def integrate_run(theta0, bx, bz, dt, mu, inertia, damping):
    """Sweep a batch of initial angles through one transit; final (theta, y)."""
    theta0 = np.ascontiguousarray(theta0, dtype=np.float64)
    if HAVE_NUMBA:
        return _integrate_run_nb(theta0, bx, bz, dt, mu, inertia, damping)
    return _integrate_run_np(theta0, bx, bz, dt, mu, inertia, damping)


def integrate_path(theta0, bx, bz, dt, mu, inertia, damping, stride=1):
    """Like integrate_run for one angle, recording every ``stride`` steps."""
    if HAVE_NUMBA:
        return _integrate_path_nb(float(theta0), bx, bz, dt, mu, inertia,
                                  damping, stride)
    return _integrate_path_np(float(theta0), bx, bz, dt, mu, inertia,
                              damping, stride)


def integrate_const_field(theta0, y0, bx, bz, dt, mu, inertia, damping,
                          n_steps, record_every=1, velocity_first=True):
    """Long run in a static field; velocity_first=False is plain forward Euler.

    Returns (theta_samples, y_samples, final_theta, final_y).
    """
    args = (float(theta0), float(y0), float(bx), float(bz), float(dt),
            float(mu), float(inertia), float(damping), int(n_steps),
            int(record_every), bool(velocity_first))
    if HAVE_NUMBA:
        return _integrate_const_nb(*args)
    return _integrate_const_np(*args)
