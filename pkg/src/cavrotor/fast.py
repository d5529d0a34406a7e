"""Compiled hot path: quadrature reduction tables and the trajectory kernel.

The Rayleigh-scattering integrals in the equations of motion factorize
exactly as f^2(x, y) * [function of m] * {1, cos 2kz, sin 2kz}; the twelve
m-dependent reductions are tabulated once per parameter set on an angular
grid (built with the degree-30 sphere quadrature) and sampled with bicubic
interpolation inside the right-hand side. The interpolated fast path is
spot-validated against the direct quadrature at build time.

Everything here is internal; the public contracts live in ``dynamics``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .rotor import dsinc, djinc_over_t, jinc, sinc

# pars[] layout (floats; flags cast on use)
P_MASS = 0; P_INERTIA = 1; P_U0 = 2; P_GAMMA0 = 3; P_KAPPA = 4
P_DELTA = 5; P_ETA = 6; P_K = 7; P_W0 = 8; P_AU = 9; P_BM = 10
P_SCALE = 11; P_HBAR = 12; P_RADPRESS = 13; P_CAVMODE = 14
P_SCATTER = 15; P_KIND = 16
NPARS = 17

CAV_DYNAMIC = 0
CAV_ADIABATIC = 1
CAV_FROZEN = 2

# limits[] layout
L_ECAPTURE = 0; L_TCONFIRM = 1; L_XEXIT = 2; L_XBOUND = 3; L_EBLOW = 4

# driver status codes
ST_UNDECIDED = 0
ST_CAPTURED = 1
ST_TRANSMITTED = 2
ST_NAN = -1
ST_UNDERFLOW = -2
ST_BLOWUP = -3

N_TABLES = 12
# table indices: 0 G0, 1 G1 (scattering); 2/3 HX, 4/5 HY, 6/7 HZ (force
# moments, plain and cos-2kz parts); 8 ZD; 9..11 torque vector
TABLE_NT = 193
TABLE_NP = 384


# ---------------------------------------------------------------------------
# Table construction.

@njit(cache=True, parallel=True)
def _build_tables(nodes, weights, au, bm, scale, kind, nt, nphi):
    tab = np.zeros((N_TABLES, nt, nphi))
    nn = nodes.shape[0]
    for it in prange(nt):
        theta = math.pi * it / (nt - 1)
        st = math.sin(theta)
        my = math.cos(theta)
        for ip in range(nphi):
            phi = 2.0 * math.pi * ip / nphi
            mx = st * math.cos(phi)
            mz = st * math.sin(phi)
            ux = au + bm * mx * mx
            uy = bm * mx * my
            uz = bm * mx * mz
            uu = ux * ux + uy * uy + uz * uz
            g0 = 0.0; g1 = 0.0
            hx0 = 0.0; hx1 = 0.0; hy0 = 0.0; hy1 = 0.0; hz0 = 0.0; hz1 = 0.0
            zd = 0.0
            tqx = 0.0; tqy = 0.0; tqz = 0.0
            for j in range(nn):
                nx = nodes[j, 0]; ny = nodes[j, 1]; nz = nodes[j, 2]
                wq = weights[j]
                mu = mx * nx + my * ny + mz * nz
                nu = nx * ux + ny * uy + nz * uz
                psq = uu - nu * nu
                # q_- = (e_z - n)/2, q_+ = (e_z + n)/2
                qmx = -0.5 * nx; qmy = -0.5 * ny; qmz = 0.5 * (1.0 - nz)
                qpx = 0.5 * nx; qpy = 0.5 * ny; qpz = 0.5 * (1.0 + nz)
                tm = 0.5 * (mz - mu)
                tp = 0.5 * (mz + mu)
                if kind == 0:  # rod
                    sm = sinc(scale * tm)
                    sp = sinc(scale * tp)
                    cm = scale * dsinc(scale * tm)
                    cp = scale * dsinc(scale * tp)
                    dsmx = cm * qmx; dsmy = cm * qmy; dsmz = cm * qmz
                    dspx = cp * qpx; dspy = cp * qpy; dspz = cp * qpz
                else:  # disk
                    qm_sq = 0.5 * (1.0 - nz)
                    qp_sq = 0.5 * (1.0 + nz)
                    wm = math.sqrt(max(qm_sq - tm * tm, 0.0))
                    wp = math.sqrt(max(qp_sq - tp * tp, 0.0))
                    sm = jinc(scale * wm)
                    sp = jinc(scale * wp)
                    dm = scale * scale * djinc_over_t(scale * wm)
                    dp = scale * scale * djinc_over_t(scale * wp)
                    dsmx = dm * (mx * qm_sq - tm * qmx)
                    dsmy = dm * (my * qm_sq - tm * qmy)
                    dsmz = dm * (mz * qm_sq - tm * qmz)
                    dspx = dp * (mx * qp_sq - tp * qpx)
                    dspy = dp * (my * qp_sq - tp * qpy)
                    dspz = dp * (mz * qp_sq - tp * qpz)
                ssum = sm * sm + sp * sp
                scrs = 2.0 * sm * sp
                wp_ = wq * psq
                g0 += wp_ * ssum
                g1 += wp_ * scrs
                hx0 += wp_ * nx * ssum; hx1 += wp_ * nx * scrs
                hy0 += wp_ * ny * ssum; hy1 += wp_ * ny * scrs
                hz0 += wp_ * nz * ssum; hz1 += wp_ * nz * scrs
                zd += wp_ * (sm * sm - sp * sp)
                tqx += wp_ * (sp * dsmx - sm * dspx)
                tqy += wp_ * (sp * dsmy - sm * dspy)
                tqz += wp_ * (sp * dsmz - sm * dspz)
            tab[0, it, ip] = g0
            tab[1, it, ip] = g1
            tab[2, it, ip] = hx0
            tab[3, it, ip] = hx1
            tab[4, it, ip] = hy0
            tab[5, it, ip] = hy1
            tab[6, it, ip] = hz0
            tab[7, it, ip] = hz1
            tab[8, it, ip] = zd
            tab[9, it, ip] = tqx
            tab[10, it, ip] = tqy
            tab[11, it, ip] = tqz
    return tab


@njit(cache=True, inline="always")
def _cr_weights(u, w):
    """Catmull-Rom cubic weights for fractional position u into w[4]."""
    u2 = u * u
    u3 = u2 * u
    w[0] = -0.5 * u3 + u2 - 0.5 * u
    w[1] = 1.5 * u3 - 2.5 * u2 + 1.0
    w[2] = -1.5 * u3 + 2.0 * u2 + 0.5 * u
    w[3] = 0.5 * u3 - 0.5 * u2


@njit(cache=True)
def _table_lookup(tab, my, mx_, mz_, out):
    """Bicubic sample of all tables at the orientation (theta, phi) of m.

    Polar axis is e_y, so both trapped configurations (m = e_x, m = e_z)
    sit mid-grid. Theta rows continue smoothly through the poles via the
    (theta -> -theta, phi -> phi + pi) identification.
    """
    nt = tab.shape[1]
    nphi = tab.shape[2]
    cy = min(1.0, max(-1.0, my))
    theta = math.acos(cy)
    phi = math.atan2(mz_, mx_)
    if phi < 0.0:
        phi += 2.0 * math.pi

    ft = theta * (nt - 1) / math.pi
    it0 = int(ft)
    if it0 > nt - 2:
        it0 = nt - 2
    ut = ft - it0
    fp = phi * nphi / (2.0 * math.pi)
    ip0 = int(fp)
    if ip0 > nphi - 1:
        ip0 = nphi - 1
    up = fp - ip0

    wt = np.empty(4)
    wp = np.empty(4)
    _cr_weights(ut, wt)
    _cr_weights(up, wp)

    half = nphi // 2
    for f in range(tab.shape[0]):
        acc = 0.0
        for a in range(4):
            it = it0 - 1 + a
            shift = 0
            if it < 0:
                it = -it
                shift = half
            elif it > nt - 1:
                it = 2 * (nt - 1) - it
                shift = half
            row = 0.0
            for b in range(4):
                ip = (ip0 - 1 + b + shift) % nphi
                row += wp[b] * tab[f, it, ip]
            acc += wt[a] * row
        out[f] = acc


# ---------------------------------------------------------------------------
# Right-hand side of the coupled particle-cavity equations.

@njit(cache=True)
def _rhs(y, pars, tab, tl, du):
    """Fill du with dy/dt; returns (v, gamma_sc, br_used, bi_used)."""
    mass = pars[P_MASS]; inertia = pars[P_INERTIA]
    u0 = pars[P_U0]; gamma0 = pars[P_GAMMA0]
    kappa = pars[P_KAPPA]; delta = pars[P_DELTA]; eta = pars[P_ETA]
    k = pars[P_K]; w0 = pars[P_W0]
    au = pars[P_AU]; bm = pars[P_BM]; scale = pars[P_SCALE]
    hbar = pars[P_HBAR]
    rad = pars[P_RADPRESS] > 0.5
    cavmode = int(pars[P_CAVMODE])
    scatter = pars[P_SCATTER] > 0.5
    kind = int(pars[P_KIND])

    x = y[0]; yy = y[1]; z = y[2]
    px = y[3]; py = y[4]; pz = y[5]
    mx = y[6]; my = y[7]; mz = y[8]
    lx = y[9]; ly = y[10]; lz = y[11]
    br = y[12]; bi = y[13]

    w0sq = w0 * w0
    f2 = math.exp(-2.0 * (x * x + yy * yy) / w0sq)
    c2z = math.cos(2.0 * k * z)
    s2z = math.sin(2.0 * k * z)

    # axial shape function S(m, e_z) and its m-gradient
    if kind == 0:
        sz = sinc(scale * mz)
        dszx = 0.0; dszy = 0.0
        dszz = scale * dsinc(scale * mz)
    elif kind == 1:
        wsq = mx * mx + my * my
        w = math.sqrt(wsq)
        sz = jinc(scale * w)
        dd = scale * scale * djinc_over_t(scale * w)
        dszx = dd * mx; dszy = dd * my; dszz = 0.0
    else:
        sz = 1.0
        dszx = 0.0; dszy = 0.0; dszz = 0.0

    b1 = au + bm * mx * mx
    b2f = 0.5 + 0.5 * c2z * sz
    v = f2 * b1 * b2f

    dvdx = -4.0 * x / w0sq * v
    dvdy = -4.0 * yy / w0sq * v
    dvdz = -f2 * b1 * k * s2z * sz
    half_c = 0.5 * c2z
    dvmx = f2 * (2.0 * bm * mx * b2f + b1 * half_c * dszx)
    dvmy = f2 * (b1 * half_c * dszy)
    dvmz = f2 * (b1 * half_c * dszz)

    # scattering reductions (tables for rod/disk, closed form for sphere)
    g0 = 0.0; g1 = 0.0
    hx0 = 0.0; hx1 = 0.0; hy0 = 0.0; hy1 = 0.0; hz0 = 0.0; hz1 = 0.0
    zd = 0.0; tqx = 0.0; tqy = 0.0; tqz = 0.0
    need_tab = (scatter or rad) and kind < 2
    if need_tab:
        _table_lookup(tab, my, mx, mz, tl)
        g0 = tl[0]; g1 = tl[1]
        hx0 = tl[2]; hx1 = tl[3]; hy0 = tl[4]; hy1 = tl[5]
        hz0 = tl[6]; hz1 = tl[7]; zd = tl[8]
        tqx = tl[9]; tqy = tl[10]; tqz = tl[11]
    elif kind == 2:
        g0 = 4.0 / 3.0 * au * au
        g1 = g0

    gsc = 0.0
    if scatter or kind == 2:
        gsc = gamma0 * 0.375 * f2 * (g0 + c2z * g1)

    detune = delta - u0 * v
    if cavmode == CAV_ADIABATIC:
        kap_eff = kappa + (0.5 * gsc if scatter else 0.0)
        denom = kap_eff * kap_eff + detune * detune
        br_use = eta * kap_eff / denom
        bi_use = -eta * detune / denom
    else:
        br_use = br
        bi_use = bi
    bsq = br_use * br_use + bi_use * bi_use

    cpot = hbar * u0 * bsq
    fx = -cpot * dvdx
    fy = -cpot * dvdy
    fz = -cpot * dvdz
    # conservative torque -m x dV/dm
    ntx = -cpot * (my * dvmz - mz * dvmy)
    nty = -cpot * (mz * dvmx - mx * dvmz)
    ntz = -cpot * (mx * dvmy - my * dvmx)

    if rad and kind < 2:
        pref = hbar * gamma0 * bsq * 0.375 * f2
        fx += pref * (-k) * (hx0 + c2z * hx1)
        fy += pref * (-k) * (hy0 + c2z * hy1)
        fz += pref * k * (zd - (hz0 + c2z * hz1))
        ps = pref * s2z
        ntx += ps * (my * tqz - mz * tqy)
        nty += ps * (mz * tqx - mx * tqz)
        ntz += ps * (mx * tqy - my * tqx)

    du[0] = px / mass
    du[1] = py / mass
    du[2] = pz / mass
    du[3] = fx
    du[4] = fy
    du[5] = fz
    # m' = (L/I) x m
    du[6] = (ly * mz - lz * my) / inertia
    du[7] = (lz * mx - lx * mz) / inertia
    du[8] = (lx * my - ly * mx) / inertia
    du[9] = ntx
    du[10] = nty
    du[11] = ntz
    if cavmode == CAV_DYNAMIC:
        kap_eff = kappa + (0.5 * gsc if scatter else 0.0)
        du[12] = -kap_eff * br - detune * bi + eta
        du[13] = detune * br - kap_eff * bi
    else:
        du[12] = 0.0
        du[13] = 0.0
    return v, gsc, br_use, bi_use


# ---------------------------------------------------------------------------
# Embedded Dormand-Prince 5(4) driver with PI step control, projection of the
# rotor constraints, dense output at a fixed cadence and capture/transit
# event handling.

@njit(cache=True, nogil=True)
def _integrate(y0, t0, t_end, h_init, rtol, atolv, max_step, cadence,
               pars, tab, limits, out):
    y = y0.copy()
    yt = np.empty(14)
    ynew = np.empty(14)
    k1 = np.empty(14); k2 = np.empty(14); k3 = np.empty(14)
    k4 = np.empty(14); k5 = np.empty(14); k6 = np.empty(14); k7 = np.empty(14)
    tl = np.empty(N_TABLES)

    mass = pars[P_MASS]; inertia = pars[P_INERTIA]
    hbar = pars[P_HBAR]; u0 = pars[P_U0]
    kind = int(pars[P_KIND])

    e_capture = limits[L_ECAPTURE]
    t_confirm = limits[L_TCONFIRM]
    x_exit = limits[L_XEXIT]
    x_bound = limits[L_XBOUND]
    e_blow = limits[L_EBLOW]

    t = t0
    v, gsc, bru, biu = _rhs(y, pars, tab, tl, k1)

    def _energy(yv, vv, brv, biv):
        kin = (yv[3] * yv[3] + yv[4] * yv[4] + yv[5] * yv[5]) / (2.0 * mass)
        rot = (yv[9] * yv[9] + yv[10] * yv[10] + yv[11] * yv[11]) / (2.0 * inertia)
        return kin + rot + hbar * u0 * (brv * brv + biv * biv) * vv

    nfill = 0
    nmax = out.shape[0]
    if cadence > 0.0 and nmax > 0:
        out[0, 0] = t
        for i in range(14):
            out[0, 1 + i] = y[i]
        out[0, 13] = bru
        out[0, 14] = biu
        out[0, 15] = _energy(y, v, bru, biu)
        out[0, 16] = gsc
        nfill = 1
    next_sample = t0 + cadence

    h = h_init
    err_prev = 1.0e-2
    below_time = 0.0
    status = ST_UNDECIDED
    nsteps = 0
    naccept = 0
    tiny = 1e-13

    t_close = tiny if tiny > 4e-16 * abs(t_end) else 4e-16 * abs(t_end)
    while t < t_end - t_close:
        nsteps += 1
        if nsteps > 200_000_000:
            status = ST_UNDERFLOW
            break
        if h > max_step:
            h = max_step
        if cadence > 0.0 and nfill < nmax and t + h > next_sample:
            h = next_sample - t
        if t + h > t_end:
            h = t_end - t
        if h < tiny:
            status = ST_UNDERFLOW
            break

        # Dormand-Prince stages (FSAL: k1 is the previous step's k7)
        for i in range(14):
            yt[i] = y[i] + h * 0.2 * k1[i]
        _rhs(yt, pars, tab, tl, k2)
        for i in range(14):
            yt[i] = y[i] + h * (0.075 * k1[i] + 0.225 * k2[i])
        _rhs(yt, pars, tab, tl, k3)
        for i in range(14):
            yt[i] = y[i] + h * ((44.0 / 45.0) * k1[i] - (56.0 / 15.0) * k2[i]
                                + (32.0 / 9.0) * k3[i])
        _rhs(yt, pars, tab, tl, k4)
        for i in range(14):
            yt[i] = y[i] + h * ((19372.0 / 6561.0) * k1[i]
                                - (25360.0 / 2187.0) * k2[i]
                                + (64448.0 / 6561.0) * k3[i]
                                - (212.0 / 729.0) * k4[i])
        _rhs(yt, pars, tab, tl, k5)
        for i in range(14):
            yt[i] = y[i] + h * ((9017.0 / 3168.0) * k1[i]
                                - (355.0 / 33.0) * k2[i]
                                + (46732.0 / 5247.0) * k3[i]
                                + (49.0 / 176.0) * k4[i]
                                - (5103.0 / 18656.0) * k5[i])
        _rhs(yt, pars, tab, tl, k6)
        for i in range(14):
            ynew[i] = y[i] + h * ((35.0 / 384.0) * k1[i]
                                  + (500.0 / 1113.0) * k3[i]
                                  + (125.0 / 192.0) * k4[i]
                                  - (2187.0 / 6784.0) * k5[i]
                                  + (11.0 / 84.0) * k6[i])
        vn, gscn, brn, bin_ = _rhs(ynew, pars, tab, tl, k7)

        # scaled error norm from the embedded 4th-order solution
        errsq = 0.0
        bad = False
        for i in range(14):
            ei = h * ((71.0 / 57600.0) * k1[i]
                      - (71.0 / 16695.0) * k3[i]
                      + (71.0 / 1920.0) * k4[i]
                      - (17253.0 / 339200.0) * k5[i]
                      + (22.0 / 525.0) * k6[i]
                      - (1.0 / 40.0) * k7[i])
            ay = abs(y[i])
            an = abs(ynew[i])
            sc = atolv[i] + rtol * (ay if ay > an else an)
            if sc <= 0.0:
                sc = 1e-300
            q = ei / sc
            errsq += q * q
            if not math.isfinite(ynew[i]):
                bad = True
        err = math.sqrt(errsq / 14.0)

        if bad:
            status = ST_NAN
            break

        if err <= 1.0:
            t += h
            naccept += 1
            # rotor constraint projection: |m| = 1, L perpendicular to m
            if kind < 2:
                nm = math.sqrt(ynew[6] * ynew[6] + ynew[7] * ynew[7]
                               + ynew[8] * ynew[8])
                if nm > 0.0:
                    ynew[6] /= nm; ynew[7] /= nm; ynew[8] /= nm
                lm = (ynew[9] * ynew[6] + ynew[10] * ynew[7]
                      + ynew[11] * ynew[8])
                ynew[9] -= lm * ynew[6]
                ynew[10] -= lm * ynew[7]
                ynew[11] -= lm * ynew[8]
            for i in range(14):
                y[i] = ynew[i]
            for i in range(14):
                k1[i] = k7[i]
            v = vn; gsc = gscn; bru = brn; biu = bin_

            energy = _energy(y, v, bru, biu)
            if not math.isfinite(energy):
                status = ST_NAN
                break
            if energy > e_blow:
                status = ST_BLOWUP
                break

            # capture confirmation window
            if energy < e_capture and abs(y[0]) < x_bound:
                below_time += h
                if below_time >= t_confirm:
                    status = ST_CAPTURED
            else:
                below_time = 0.0
            # transit exit
            if abs(y[0]) > x_exit and energy > 0.0 and y[0] * y[3] > 0.0:
                status = ST_TRANSMITTED

            if cadence > 0.0 and nfill < nmax and t >= next_sample - tiny:
                out[nfill, 0] = t
                for i in range(14):
                    out[nfill, 1 + i] = y[i]
                out[nfill, 13] = bru
                out[nfill, 14] = biu
                out[nfill, 15] = energy
                out[nfill, 16] = gsc
                nfill += 1
                next_sample += cadence

            if status != ST_UNDECIDED:
                break

            if err < 1e-10:
                fac = 5.0
            else:
                fac = 0.9 * err ** (-0.17) * err_prev ** 0.06
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
            err_prev = err if err > 1e-4 else 1e-4
        else:
            fac = 0.9 * err ** (-0.2)
            if fac < 0.1:
                fac = 0.1
            h *= fac
            # FSAL slot still holds the derivative at the (unchanged) y

    return status, nfill, t, y, nsteps, naccept
