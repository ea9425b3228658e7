"""Pure-Python simulation kernel (fallback backend).

One call simulates one run end to end: per-sample ambient update, conductor
heat-balance step, two-bus solve, measurement corruption, optional timing
faults on a PMU stream, tan-delta estimation and the slope-ratio detector.

The compiled extension (``emberline._kernel``) implements the identical
sample loop; every floating-point expression here is written in the exact
shape the C code uses (explicit re/im arithmetic, naive complex division,
``x*sqrt(x)`` for the 1.5 power, squared squares for the 4th power) so both
backends produce bit-equal outputs.  Edit the two files together or the
backend-equivalence tests will fail.

See ``_kernel_layout`` for what lives in each array slot.
"""

from __future__ import annotations

import math

from . import _kernel_layout as L

BACKEND = "python"

_NAN = math.nan


def run_kernel(
    dp,
    ip,
    noise,
    ev_idx,
    ev_fac,
    ta,
    meas,
    raw_ring,
    raw_valid,
    ma_ring,
    trace,
    out_f,
    out_i,
) -> None:
    """Simulate one run; results land in ``out_f``/``out_i`` (and ``meas``/``trace``).

    The ring buffers are scratch space sized by the driver; their final
    content is meaningless.  This implementation keeps its own Python-list
    state for speed and bulk-copies ``meas``/``trace`` at the end.
    """
    # ---- unpack parameters ---------------------------------------------
    n = int(ip[L.IP_N])
    iid = int(ip[L.IP_NOISE_IID])
    want_trace = int(ip[L.IP_WANT_TRACE])
    fmode = int(ip[L.IP_FAULT_MODE])
    fonset = int(ip[L.IP_FAULT_ONSET])
    fdelay = int(ip[L.IP_FAULT_DELAY])
    fmask = int(ip[L.IP_FAULT_MASK])
    lag1 = int(ip[L.IP_LAG1])
    lag_a = int(ip[L.IP_LAG_A])
    lag_b = int(ip[L.IP_LAG_B])
    lag_c = int(ip[L.IP_LAG_C])
    w = int(ip[L.IP_WINDOW])

    dt = dp[L.DP_DT]
    vs_mag = dp[L.DP_VS_MAG]
    r_ref = dp[L.DP_R_REF]
    alpha = dp[L.DP_ALPHA]
    t_ref = dp[L.DP_T_REF]
    x0 = dp[L.DP_X0]
    b_r_node = dp[L.DP_B_R_NODE]
    p_load = dp[L.DP_P_LOAD]
    q_load = dp[L.DP_Q_LOAD]
    v_w = dp[L.DP_V_W]
    elev = dp[L.DP_ELEVATION]
    q_solar = dp[L.DP_Q_SOLAR]
    diam = dp[L.DP_DIAM]
    emiss = dp[L.DP_EMISS]
    m_cp = dp[L.DP_M_CP]
    len_m = dp[L.DP_LEN_M]
    v_lim = dp[L.DP_V_MAG_LIM]
    i_lim = dp[L.DP_I_MAG_LIM]
    i_lim_low = dp[L.DP_I_MAG_LIM_LOW]
    i_thr_sq = dp[L.DP_I_LOW_THR_SQ]
    ang_lim = dp[L.DP_ANG_LIM_RAD]
    tve_lim = dp[L.DP_TVE_LIM]
    step_thresh = dp[L.DP_STEP_THRESH]
    den_eps = dp[L.DP_DEN_EPS_REL]
    ma_floor = dp[L.DP_MA_DEN_FLOOR]
    gate = 1.0 + dp[L.DP_RATIO_MARGIN]

    ta_l = [float(v) for v in ta]
    noise_l = [[float(v) for v in row] for row in noise]
    ev_idx_l = [int(v) for v in ev_idx]
    ev_fac_l = [float(v) for v in ev_fac]
    n_ev = len(ev_idx_l)

    # ---- constant-noise factor hoist ------------------------------------
    # With one noise row the per-phasor corruption factors never change;
    # computing them once keeps the hot loop free of trig. The expressions
    # match measurement._apply_factor exactly.
    if iid == 0:
        r0 = noise_l[0]
        e_ang = ang_lim * r0[1]
        c = math.cos(e_ang)
        s = math.sin(e_ang)
        em = v_lim * r0[0]
        fvs_re = (1.0 + em) * c + tve_lim * r0[2]
        fvs_im = (1.0 + em) * s + tve_lim * r0[3]
        e_ang = ang_lim * r0[5]
        c = math.cos(e_ang)
        s = math.sin(e_ang)
        em = v_lim * r0[4]
        fvr_re = (1.0 + em) * c + tve_lim * r0[6]
        fvr_im = (1.0 + em) * s + tve_lim * r0[7]
        e_ang = ang_lim * r0[13]
        c = math.cos(e_ang)
        s = math.sin(e_ang)
        tre = tve_lim * r0[14]
        tim = tve_lim * r0[15]
        em = i_lim * r0[12]
        fir_hi_re = (1.0 + em) * c + tre
        fir_hi_im = (1.0 + em) * s + tim
        em = i_lim_low * r0[12]
        fir_lo_re = (1.0 + em) * c + tre
        fir_lo_im = (1.0 + em) * s + tim
    else:
        fvs_re = fvs_im = fvr_re = fvr_im = 0.0
        fir_hi_re = fir_hi_im = fir_lo_re = fir_lo_im = 0.0

    # ---- state -----------------------------------------------------------
    t_c = dp[L.DP_T_C0]
    i_sq_prev = 0.0
    x_cur = x0
    ev_ptr = 0
    diam_p75 = diam**0.75

    hist_start = 0
    s_sum = 0.0
    s_cnt = 0
    last_valid = _NAN
    trip1 = -1
    trip2 = -1
    restarts = 0
    first_restart = -1
    invalid = 0
    held_tan = _NAN
    ma_last = _NAN
    mring = lag_c + 1
    raw_ring_l = [0.0] * w
    raw_valid_l = [0] * w
    ma_ring_l = [_NAN] * mring

    mv_s_re = [0.0] * n
    mv_s_im = [0.0] * n
    mv_r_re = [0.0] * n
    mv_r_im = [0.0] * n
    mi_r_re = [0.0] * n
    mi_r_im = [0.0] * n
    tr = [[_NAN] * L.TRACE_COLS for _ in range(n)] if want_trace else None

    out_f[L.OF_T_C_START] = t_c
    out_f[L.OF_TAN_TRUE_START] = _NAN
    out_f[L.OF_TAN_TRUE_END] = _NAN
    out_f[L.OF_P_R0] = _NAN
    out_f[L.OF_Q_R0] = _NAN
    out_f[L.OF_I_RMS0] = _NAN
    infeasible_at = -1
    r_tot = r_ref

    k = 0
    while k < n:
        t_a_k = ta_l[k]

        # -- thermal step (joule term from the previous sample's current) --
        if k > 0:
            t_film = 0.5 * (t_c + t_a_k)
            k_f = 2.424e-2 + 7.477e-5 * t_film + -4.407e-9 * (t_film * t_film)
            t_film_k = t_film + 273.0
            mu_f = 1.458e-6 * (t_film_k * math.sqrt(t_film_k)) / (t_film + 383.4)
            rho_f = (1.293 + -1.525e-4 * elev + 6.379e-9 * (elev * elev)) / (1.0 + 0.00367 * t_film)
            dt_air = t_c - t_a_k
            re_n = diam * rho_f * v_w / mu_f
            q_forced = (1.01 + 1.35 * re_n**0.52) * k_f * dt_air
            ad = dt_air if dt_air >= 0.0 else -dt_air
            q_nat = 3.645 * math.sqrt(rho_f) * diam_p75 * ad**1.25
            if dt_air < 0.0:
                q_nat = -q_nat
            af = q_forced if q_forced >= 0.0 else -q_forced
            an = q_nat if q_nat >= 0.0 else -q_nat
            q_conv = q_forced if af >= an else q_nat
            a_s = (t_c + 273.0) * 0.01
            a_s2 = a_s * a_s
            a_a = (t_a_k + 273.0) * 0.01
            a_a2 = a_a * a_a
            q_rad = 17.8 * diam * emiss * (a_s2 * a_s2 - a_a2 * a_a2)
            r_step = r_ref * (1.0 + alpha * (t_c - t_ref))
            r_pm = r_step / len_m
            rate = r_pm * i_sq_prev + q_solar - q_conv - q_rad
            t_c = t_c + dt * (rate / m_cp)

        # -- network solve at the current temperature ----------------------
        r_tot = r_ref * (1.0 + alpha * (t_c - t_ref))
        while ev_ptr < n_ev and k >= ev_idx_l[ev_ptr]:
            x_cur = x0 * ev_fac_l[ev_ptr]
            ev_ptr += 1

        den_re = 1.0 - x_cur * b_r_node
        den_im = r_tot * b_r_node
        dmag2 = den_re * den_re + den_im * den_im
        feasible = dmag2 > 0.0
        vr_re = vr_im = ir_re = ir_im = 0.0
        if feasible:
            vth_re = (vs_mag * den_re + 0.0 * den_im) / dmag2
            vth_im = (0.0 * den_re - vs_mag * den_im) / dmag2
            zth_re = (r_tot * den_re + x_cur * den_im) / dmag2
            zth_im = (x_cur * den_re - r_tot * den_im) / dmag2
            g_re = p_load * zth_re + q_load * zth_im
            g_im = p_load * zth_im - q_load * zth_re
            e2 = vth_re * vth_re + vth_im * vth_im
            e = math.sqrt(e2)
            if e <= 0.0:
                feasible = False
            else:
                w_im = -g_im / e
                disc = e2 - 4.0 * (w_im * w_im + g_re)
                if disc < 0.0:
                    feasible = False
                else:
                    w_re = 0.5 * (e + math.sqrt(disc))
                    if w_re <= 0.0:
                        feasible = False
                    else:
                        u_re = vth_re / e
                        u_im = vth_im / e
                        vr_re = w_re * u_re - w_im * u_im
                        vr_im = w_re * u_im + w_im * u_re
                        dv_re = vs_mag - vr_re
                        dv_im = 0.0 - vr_im
                        zmag2 = r_tot * r_tot + x_cur * x_cur
                        ir_re = (dv_re * r_tot + dv_im * x_cur) / zmag2
                        ir_im = (dv_im * r_tot - dv_re * x_cur) / zmag2
        if not feasible:
            infeasible_at = k
            break

        isq_true = ir_re * ir_re + ir_im * ir_im
        if k == 0:
            out_f[L.OF_P_R0] = vr_re * ir_re + vr_im * ir_im
            out_f[L.OF_Q_R0] = vr_im * ir_re - vr_re * ir_im
            out_f[L.OF_I_RMS0] = math.sqrt(isq_true)
            out_f[L.OF_TAN_TRUE_START] = x_cur / r_tot
        i_sq_prev = isq_true

        # -- measurement ----------------------------------------------------
        if iid != 0:
            rk = noise_l[k]
            e_ang = ang_lim * rk[1]
            c = math.cos(e_ang)
            s = math.sin(e_ang)
            em = v_lim * rk[0]
            fvs_re = (1.0 + em) * c + tve_lim * rk[2]
            fvs_im = (1.0 + em) * s + tve_lim * rk[3]
            e_ang = ang_lim * rk[5]
            c = math.cos(e_ang)
            s = math.sin(e_ang)
            em = v_lim * rk[4]
            fvr_re = (1.0 + em) * c + tve_lim * rk[6]
            fvr_im = (1.0 + em) * s + tve_lim * rk[7]
            e_ang = ang_lim * rk[13]
            c = math.cos(e_ang)
            s = math.sin(e_ang)
            tre = tve_lim * rk[14]
            tim = tve_lim * rk[15]
            em = (i_lim if isq_true > i_thr_sq else i_lim_low) * rk[12]
            fi_re = (1.0 + em) * c + tre
            fi_im = (1.0 + em) * s + tim
        else:
            if isq_true > i_thr_sq:
                fi_re = fir_hi_re
                fi_im = fir_hi_im
            else:
                fi_re = fir_lo_re
                fi_im = fir_lo_im

        vs_m_re = vs_mag * fvs_re - 0.0 * fvs_im
        vs_m_im = vs_mag * fvs_im + 0.0 * fvs_re
        vr_m_re = vr_re * fvr_re - vr_im * fvr_im
        vr_m_im = vr_re * fvr_im + vr_im * fvr_re
        ir_m_re = ir_re * fi_re - ir_im * fi_im
        ir_m_im = ir_re * fi_im + ir_im * fi_re
        mv_s_re[k] = vs_m_re
        mv_s_im[k] = vs_m_im
        mv_r_re[k] = vr_m_re
        mv_r_im[k] = vr_m_im
        mi_r_re[k] = ir_m_re
        mi_r_im[k] = ir_m_im

        # -- timing-fault substitution on the detector's input ---------------
        src_s = k
        src_r = k
        if fmode == L.FAULT_FROZEN and k >= fonset:
            if fmask & L.MASK_SENDING:
                src_s = fonset
            if fmask & L.MASK_RECEIVING:
                src_r = fonset
        elif fmode == L.FAULT_DELAY and k >= fonset:
            src = k - fdelay
            if src < 0:
                src = 0
            if fmask & L.MASK_SENDING:
                src_s = src
            if fmask & L.MASK_RECEIVING:
                src_r = src

        dvs_re = mv_s_re[src_s]
        dvs_im = mv_s_im[src_s]
        dvr_re = mv_r_re[src_r]
        dvr_im = mv_r_im[src_r]
        dir_re = mi_r_re[src_r]
        dir_im = mi_r_im[src_r]

        # -- tan delta estimate (mirror of measurement.tan_delta_terms) ------
        v_mag = math.sqrt(dvr_re * dvr_re + dvr_im * dvr_im)
        tan_k = _NAN
        valid = 0
        if v_mag > 0.0:
            cross_re = dvs_re * dvr_re + dvs_im * dvr_im
            cross_im = dvs_im * dvr_re - dvs_re * dvr_im
            c_along = cross_re / v_mag
            s_across = cross_im / v_mag
            p_r = dvr_re * dir_re + dvr_im * dir_im
            q_r = dvr_im * dir_re - dvr_re * dir_im
            num = p_r * s_across + q_r * c_along - q_r * v_mag
            den = p_r * c_along - q_r * s_across - p_r * v_mag
            ap = p_r if p_r >= 0.0 else -p_r
            aq = q_r if q_r >= 0.0 else -q_r
            scale = v_mag * (ap + aq)
            ad_ = den if den >= 0.0 else -den
            if scale > 0.0 and ad_ > den_eps * scale:
                tan_k = num / den
                valid = 1
        if valid:
            held_tan = tan_k
        else:
            invalid += 1

        # -- detector -----------------------------------------------------
        if valid:
            lv = last_valid
            if lv == lv:  # not NaN
                alv = lv if lv >= 0.0 else -lv
                dx = tan_k - lv
                adx = dx if dx >= 0.0 else -dx
                if alv > 0.0 and adx > step_thresh * alv:
                    hist_start = k
                    s_sum = 0.0
                    s_cnt = 0
                    restarts += 1
                    if first_restart < 0:
                        first_restart = k
            last_valid = tan_k

        slot = k % w
        if k - w >= hist_start and raw_valid_l[slot]:
            s_sum -= raw_ring_l[slot]
            s_cnt -= 1
        raw_ring_l[slot] = tan_k if valid else 0.0
        raw_valid_l[slot] = valid
        if valid:
            s_sum += tan_k
            s_cnt += 1

        if k - hist_start + 1 >= w and s_cnt > 0:
            ma = s_sum / s_cnt
            ma_last = ma
        else:
            ma = _NAN
        ma_ring_l[k % mring] = ma

        den_idx = k - lag1
        ma_den = ma_ring_l[den_idx % mring] if den_idx >= hist_start else _NAN
        amd = ma_den if ma_den >= 0.0 else -ma_den
        den_ok = ma_den == ma_den and amd > ma_floor
        r_a = r_b = r_c = _NAN
        if den_ok:
            idx = k - lag_a
            if idx >= hist_start:
                ma_num = ma_ring_l[idx % mring]
                if ma_num == ma_num:
                    r_a = ma_num / ma_den
            idx = k - lag_b
            if idx >= hist_start:
                ma_num = ma_ring_l[idx % mring]
                if ma_num == ma_num:
                    r_b = ma_num / ma_den
            idx = k - lag_c
            if idx >= hist_start:
                ma_num = ma_ring_l[idx % mring]
                if ma_num == ma_num:
                    r_c = ma_num / ma_den
        hit_a = r_a == r_a and r_a > gate
        hit_b = r_b == r_b and r_b > gate
        hit_c = r_c == r_c and r_c > gate
        if trip1 < 0 and hit_c and (hit_b or hit_a):
            trip1 = k
        if trip2 < 0 and hit_c:
            trip2 = k

        if want_trace:
            row = tr[k]
            row[L.T_TA] = t_a_k
            row[L.T_TC] = t_c
            row[L.T_R] = r_tot
            row[L.T_X] = x_cur
            row[L.T_TAN_TRUE] = x_cur / r_tot
            row[L.T_TAN_MEAS] = tan_k
            row[L.T_TAN_HELD] = held_tan
            row[L.T_MA] = ma
            row[L.T_RATIO_A] = r_a
            row[L.T_RATIO_B] = r_b
            row[L.T_RATIO_C] = r_c
            row[L.T_I_MAG] = math.sqrt(isq_true)

        k += 1

    # ---- results ----------------------------------------------------------
    for i in range(k):
        meas[i, L.M_VS_RE] = mv_s_re[i]
        meas[i, L.M_VS_IM] = mv_s_im[i]
        meas[i, L.M_VR_RE] = mv_r_re[i]
        meas[i, L.M_VR_IM] = mv_r_im[i]
        meas[i, L.M_IR_RE] = mi_r_re[i]
        meas[i, L.M_IR_IM] = mi_r_im[i]
    if want_trace:
        for i in range(k):
            row = tr[i]
            for j in range(L.TRACE_COLS):
                trace[i, j] = row[j]

    out_f[L.OF_T_C_END] = t_c
    out_f[L.OF_TAN_TRUE_END] = x_cur / r_tot if k > 0 else _NAN
    out_f[L.OF_MA_LAST] = ma_last
    out_i[L.OI_TRIP1] = trip1
    out_i[L.OI_TRIP2] = trip2
    out_i[L.OI_RESTART_COUNT] = restarts
    out_i[L.OI_FIRST_RESTART] = first_restart
    out_i[L.OI_INVALID_COUNT] = invalid
    out_i[L.OI_INFEASIBLE_AT] = infeasible_at
    out_i[L.OI_N_DONE] = k
