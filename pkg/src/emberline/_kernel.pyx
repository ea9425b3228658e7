# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled simulation kernel.

Line-for-line transcription of ``_kernel_py.run_kernel`` into C-typed code;
see that module for the algorithm and ``_kernel_layout`` for slot meanings.
The floating-point expression shapes are deliberately identical (explicit
re/im arithmetic, naive complex division, ``x*sqrt(x)`` for the 1.5 power,
conditional negation instead of library abs on hot values) so that both
backends produce bit-equal outputs.  The build compiles with contraction
disabled (no FMA) to keep that property.  Edit the two files together.
"""

from libc.math cimport sqrt, sin, cos, pow, NAN
from libc.stdint cimport int64_t

BACKEND = "compiled"

# Slot indices; keep in sync with _kernel_layout (asserted at import below).
cdef enum:
    DP_DT = 0
    DP_VS_MAG = 1
    DP_R_REF = 2
    DP_ALPHA = 3
    DP_T_REF = 4
    DP_X0 = 5
    DP_B_R_NODE = 6
    DP_B_S_NODE = 7
    DP_P_LOAD = 8
    DP_Q_LOAD = 9
    DP_T_C0 = 10
    DP_T_A0 = 11
    DP_V_W = 12
    DP_ELEVATION = 13
    DP_Q_SOLAR = 14
    DP_DIAM = 15
    DP_EMISS = 16
    DP_M_CP = 17
    DP_LEN_M = 18
    DP_V_MAG_LIM = 19
    DP_I_MAG_LIM = 20
    DP_I_MAG_LIM_LOW = 21
    DP_I_LOW_THR_SQ = 22
    DP_ANG_LIM_RAD = 23
    DP_TVE_LIM = 24
    DP_RATIO_MARGIN = 25
    DP_STEP_THRESH = 26
    DP_DEN_EPS_REL = 27
    DP_MA_DEN_FLOOR = 28

cdef enum:
    IP_N = 0
    IP_NOISE_IID = 1
    IP_WANT_TRACE = 2
    IP_FAULT_MODE = 3
    IP_FAULT_ONSET = 4
    IP_FAULT_DELAY = 5
    IP_FAULT_MASK = 6
    IP_LAG1 = 7
    IP_LAG_A = 8
    IP_LAG_B = 9
    IP_LAG_C = 10
    IP_WINDOW = 11

cdef enum:
    FAULT_FROZEN = 1
    FAULT_DELAY_MODE = 2
    MASK_SENDING = 1
    MASK_RECEIVING = 2

cdef enum:
    M_VS_RE = 0
    M_VS_IM = 1
    M_VR_RE = 2
    M_VR_IM = 3
    M_IR_RE = 4
    M_IR_IM = 5

cdef enum:
    OF_T_C_END = 0
    OF_T_C_START = 1
    OF_TAN_TRUE_START = 2
    OF_TAN_TRUE_END = 3
    OF_P_R0 = 4
    OF_Q_R0 = 5
    OF_I_RMS0 = 6
    OF_MA_LAST = 7

cdef enum:
    OI_TRIP1 = 0
    OI_TRIP2 = 1
    OI_RESTART_COUNT = 2
    OI_FIRST_RESTART = 3
    OI_INVALID_COUNT = 4
    OI_INFEASIBLE_AT = 5
    OI_N_DONE = 6

cdef enum:
    T_TA = 0
    T_TC = 1
    T_R = 2
    T_X = 3
    T_TAN_TRUE = 4
    T_TAN_MEAS = 5
    T_TAN_HELD = 6
    T_MA = 7
    T_RATIO_A = 8
    T_RATIO_B = 9
    T_RATIO_C = 10
    T_I_MAG = 11


def run_kernel(
    double[::1] dp,
    int64_t[::1] ip,
    double[:, ::1] noise,
    int64_t[::1] ev_idx,
    double[::1] ev_fac,
    double[::1] ta,
    double[:, ::1] meas,
    double[::1] raw_ring,
    unsigned char[::1] raw_valid,
    double[::1] ma_ring,
    double[:, ::1] trace,
    double[::1] out_f,
    int64_t[::1] out_i,
):
    """Simulate one run; mirrors ``_kernel_py.run_kernel`` bit for bit."""
    cdef Py_ssize_t n = <Py_ssize_t> ip[IP_N]
    cdef int iid = <int> ip[IP_NOISE_IID]
    cdef int want_trace = <int> ip[IP_WANT_TRACE]
    cdef int fmode = <int> ip[IP_FAULT_MODE]
    cdef Py_ssize_t fonset = <Py_ssize_t> ip[IP_FAULT_ONSET]
    cdef Py_ssize_t fdelay = <Py_ssize_t> ip[IP_FAULT_DELAY]
    cdef int fmask = <int> ip[IP_FAULT_MASK]
    cdef Py_ssize_t lag1 = <Py_ssize_t> ip[IP_LAG1]
    cdef Py_ssize_t lag_a = <Py_ssize_t> ip[IP_LAG_A]
    cdef Py_ssize_t lag_b = <Py_ssize_t> ip[IP_LAG_B]
    cdef Py_ssize_t lag_c = <Py_ssize_t> ip[IP_LAG_C]
    cdef Py_ssize_t w = <Py_ssize_t> ip[IP_WINDOW]

    cdef double dt = dp[DP_DT]
    cdef double vs_mag = dp[DP_VS_MAG]
    cdef double r_ref = dp[DP_R_REF]
    cdef double alpha = dp[DP_ALPHA]
    cdef double t_ref = dp[DP_T_REF]
    cdef double x0 = dp[DP_X0]
    cdef double b_r_node = dp[DP_B_R_NODE]
    cdef double p_load = dp[DP_P_LOAD]
    cdef double q_load = dp[DP_Q_LOAD]
    cdef double v_w = dp[DP_V_W]
    cdef double elev = dp[DP_ELEVATION]
    cdef double q_solar = dp[DP_Q_SOLAR]
    cdef double diam = dp[DP_DIAM]
    cdef double emiss = dp[DP_EMISS]
    cdef double m_cp = dp[DP_M_CP]
    cdef double len_m = dp[DP_LEN_M]
    cdef double v_lim = dp[DP_V_MAG_LIM]
    cdef double i_lim = dp[DP_I_MAG_LIM]
    cdef double i_lim_low = dp[DP_I_MAG_LIM_LOW]
    cdef double i_thr_sq = dp[DP_I_LOW_THR_SQ]
    cdef double ang_lim = dp[DP_ANG_LIM_RAD]
    cdef double tve_lim = dp[DP_TVE_LIM]
    cdef double step_thresh = dp[DP_STEP_THRESH]
    cdef double den_eps = dp[DP_DEN_EPS_REL]
    cdef double ma_floor = dp[DP_MA_DEN_FLOOR]
    cdef double gate = 1.0 + dp[DP_RATIO_MARGIN]

    cdef Py_ssize_t n_ev = ev_idx.shape[0]

    cdef double fvs_re = 0.0, fvs_im = 0.0, fvr_re = 0.0, fvr_im = 0.0
    cdef double fir_hi_re = 0.0, fir_hi_im = 0.0, fir_lo_re = 0.0, fir_lo_im = 0.0
    cdef double e_ang, c, s, em, tre, tim
    if iid == 0:
        e_ang = ang_lim * noise[0, 1]
        c = cos(e_ang)
        s = sin(e_ang)
        em = v_lim * noise[0, 0]
        fvs_re = (1.0 + em) * c + tve_lim * noise[0, 2]
        fvs_im = (1.0 + em) * s + tve_lim * noise[0, 3]
        e_ang = ang_lim * noise[0, 5]
        c = cos(e_ang)
        s = sin(e_ang)
        em = v_lim * noise[0, 4]
        fvr_re = (1.0 + em) * c + tve_lim * noise[0, 6]
        fvr_im = (1.0 + em) * s + tve_lim * noise[0, 7]
        e_ang = ang_lim * noise[0, 13]
        c = cos(e_ang)
        s = sin(e_ang)
        tre = tve_lim * noise[0, 14]
        tim = tve_lim * noise[0, 15]
        em = i_lim * noise[0, 12]
        fir_hi_re = (1.0 + em) * c + tre
        fir_hi_im = (1.0 + em) * s + tim
        em = i_lim_low * noise[0, 12]
        fir_lo_re = (1.0 + em) * c + tre
        fir_lo_im = (1.0 + em) * s + tim

    cdef double t_c = dp[DP_T_C0]
    cdef double i_sq_prev = 0.0
    cdef double x_cur = x0
    cdef Py_ssize_t ev_ptr = 0
    cdef double diam_p75 = pow(diam, 0.75)

    cdef Py_ssize_t hist_start = 0
    cdef double s_sum = 0.0
    cdef Py_ssize_t s_cnt = 0
    cdef double last_valid = NAN
    cdef int64_t trip1 = -1
    cdef int64_t trip2 = -1
    cdef int64_t restarts = 0
    cdef int64_t first_restart = -1
    cdef int64_t invalid = 0
    cdef double held_tan = NAN
    cdef double ma_last = NAN
    cdef Py_ssize_t mring = lag_c + 1

    cdef Py_ssize_t i
    for i in range(w):
        raw_ring[i] = 0.0
        raw_valid[i] = 0
    for i in range(mring):
        ma_ring[i] = NAN

    out_f[OF_T_C_START] = t_c
    out_f[OF_TAN_TRUE_START] = NAN
    out_f[OF_TAN_TRUE_END] = NAN
    out_f[OF_P_R0] = NAN
    out_f[OF_Q_R0] = NAN
    out_f[OF_I_RMS0] = NAN
    cdef int64_t infeasible_at = -1
    cdef double r_tot = r_ref

    cdef Py_ssize_t k = 0, slot, src_s, src_r, src, den_idx, idx
    cdef double t_a_k, t_film, k_f, t_film_k, mu_f, rho_f, dt_air, re_n
    cdef double q_forced, ad, q_nat, af, an, q_conv, a_s, a_s2, a_a, a_a2, q_rad
    cdef double r_step, r_pm, rate
    cdef double den_re, den_im, dmag2, vth_re, vth_im, zth_re, zth_im
    cdef double g_re, g_im, e2, e, w_im, disc, w_re, u_re, u_im
    cdef double vr_re, vr_im, ir_re, ir_im, dv_re, dv_im, zmag2
    cdef double isq_true, fi_re, fi_im
    cdef double vs_m_re, vs_m_im, vr_m_re, vr_m_im, ir_m_re, ir_m_im
    cdef double dvs_re, dvs_im, dvr_re, dvr_im, dir_re, dir_im
    cdef double v_mag, cross_re, cross_im, c_along, s_across, p_r, q_r
    cdef double num, den, ap, aq, scale, ad_, tan_k, lv, alv, dx, adx
    cdef double ma, ma_den, amd, ma_num, r_a, r_b, r_c
    cdef int feasible, valid, den_ok, hit_a, hit_b, hit_c

    while k < n:
        t_a_k = ta[k]

        # -- thermal step (joule term from the previous sample's current) --
        if k > 0:
            t_film = 0.5 * (t_c + t_a_k)
            k_f = 2.424e-2 + 7.477e-5 * t_film + -4.407e-9 * (t_film * t_film)
            t_film_k = t_film + 273.0
            mu_f = 1.458e-6 * (t_film_k * sqrt(t_film_k)) / (t_film + 383.4)
            rho_f = (1.293 + -1.525e-4 * elev + 6.379e-9 * (elev * elev)) / (1.0 + 0.00367 * t_film)
            dt_air = t_c - t_a_k
            re_n = diam * rho_f * v_w / mu_f
            q_forced = (1.01 + 1.35 * pow(re_n, 0.52)) * k_f * dt_air
            ad = dt_air if dt_air >= 0.0 else -dt_air
            q_nat = 3.645 * sqrt(rho_f) * diam_p75 * pow(ad, 1.25)
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
        while ev_ptr < n_ev and k >= <Py_ssize_t> ev_idx[ev_ptr]:
            x_cur = x0 * ev_fac[ev_ptr]
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
            e = sqrt(e2)
            if e <= 0.0:
                feasible = 0
            else:
                w_im = -g_im / e
                disc = e2 - 4.0 * (w_im * w_im + g_re)
                if disc < 0.0:
                    feasible = 0
                else:
                    w_re = 0.5 * (e + sqrt(disc))
                    if w_re <= 0.0:
                        feasible = 0
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
            out_f[OF_P_R0] = vr_re * ir_re + vr_im * ir_im
            out_f[OF_Q_R0] = vr_im * ir_re - vr_re * ir_im
            out_f[OF_I_RMS0] = sqrt(isq_true)
            out_f[OF_TAN_TRUE_START] = x_cur / r_tot
        i_sq_prev = isq_true

        # -- measurement ----------------------------------------------------
        if iid != 0:
            e_ang = ang_lim * noise[k, 1]
            c = cos(e_ang)
            s = sin(e_ang)
            em = v_lim * noise[k, 0]
            fvs_re = (1.0 + em) * c + tve_lim * noise[k, 2]
            fvs_im = (1.0 + em) * s + tve_lim * noise[k, 3]
            e_ang = ang_lim * noise[k, 5]
            c = cos(e_ang)
            s = sin(e_ang)
            em = v_lim * noise[k, 4]
            fvr_re = (1.0 + em) * c + tve_lim * noise[k, 6]
            fvr_im = (1.0 + em) * s + tve_lim * noise[k, 7]
            e_ang = ang_lim * noise[k, 13]
            c = cos(e_ang)
            s = sin(e_ang)
            tre = tve_lim * noise[k, 14]
            tim = tve_lim * noise[k, 15]
            em = (i_lim if isq_true > i_thr_sq else i_lim_low) * noise[k, 12]
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
        meas[k, M_VS_RE] = vs_m_re
        meas[k, M_VS_IM] = vs_m_im
        meas[k, M_VR_RE] = vr_m_re
        meas[k, M_VR_IM] = vr_m_im
        meas[k, M_IR_RE] = ir_m_re
        meas[k, M_IR_IM] = ir_m_im

        # -- timing-fault substitution on the detector's input ---------------
        src_s = k
        src_r = k
        if fmode == FAULT_FROZEN and k >= fonset:
            if fmask & MASK_SENDING:
                src_s = fonset
            if fmask & MASK_RECEIVING:
                src_r = fonset
        elif fmode == FAULT_DELAY_MODE and k >= fonset:
            src = k - fdelay
            if src < 0:
                src = 0
            if fmask & MASK_SENDING:
                src_s = src
            if fmask & MASK_RECEIVING:
                src_r = src

        dvs_re = meas[src_s, M_VS_RE]
        dvs_im = meas[src_s, M_VS_IM]
        dvr_re = meas[src_r, M_VR_RE]
        dvr_im = meas[src_r, M_VR_IM]
        dir_re = meas[src_r, M_IR_RE]
        dir_im = meas[src_r, M_IR_IM]

        # -- tan delta estimate (mirror of measurement.tan_delta_terms) ------
        v_mag = sqrt(dvr_re * dvr_re + dvr_im * dvr_im)
        tan_k = NAN
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
        if k - w >= hist_start and raw_valid[slot]:
            s_sum -= raw_ring[slot]
            s_cnt -= 1
        raw_ring[slot] = tan_k if valid else 0.0
        raw_valid[slot] = <unsigned char> valid
        if valid:
            s_sum += tan_k
            s_cnt += 1

        if k - hist_start + 1 >= w and s_cnt > 0:
            ma = s_sum / s_cnt
            ma_last = ma
        else:
            ma = NAN
        ma_ring[k % mring] = ma

        den_idx = k - lag1
        ma_den = ma_ring[den_idx % mring] if den_idx >= hist_start else NAN
        amd = ma_den if ma_den >= 0.0 else -ma_den
        den_ok = ma_den == ma_den and amd > ma_floor
        r_a = NAN
        r_b = NAN
        r_c = NAN
        if den_ok:
            idx = k - lag_a
            if idx >= hist_start:
                ma_num = ma_ring[idx % mring]
                if ma_num == ma_num:
                    r_a = ma_num / ma_den
            idx = k - lag_b
            if idx >= hist_start:
                ma_num = ma_ring[idx % mring]
                if ma_num == ma_num:
                    r_b = ma_num / ma_den
            idx = k - lag_c
            if idx >= hist_start:
                ma_num = ma_ring[idx % mring]
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
            trace[k, T_TA] = t_a_k
            trace[k, T_TC] = t_c
            trace[k, T_R] = r_tot
            trace[k, T_X] = x_cur
            trace[k, T_TAN_TRUE] = x_cur / r_tot
            trace[k, T_TAN_MEAS] = tan_k
            trace[k, T_TAN_HELD] = held_tan
            trace[k, T_MA] = ma
            trace[k, T_RATIO_A] = r_a
            trace[k, T_RATIO_B] = r_b
            trace[k, T_RATIO_C] = r_c
            trace[k, T_I_MAG] = sqrt(isq_true)

        k += 1

    out_f[OF_T_C_END] = t_c
    out_f[OF_TAN_TRUE_END] = x_cur / r_tot if k > 0 else NAN
    out_f[OF_MA_LAST] = ma_last
    out_i[OI_TRIP1] = trip1
    out_i[OI_TRIP2] = trip2
    out_i[OI_RESTART_COUNT] = restarts
    out_i[OI_FIRST_RESTART] = first_restart
    out_i[OI_INVALID_COUNT] = invalid
    out_i[OI_INFEASIBLE_AT] = infeasible_at
    out_i[OI_N_DONE] = <int64_t> k


def _check_layout():
    """Guard against slot drift between this module and _kernel_layout."""
    from . import _kernel_layout as L

    pairs = [
        (DP_MA_DEN_FLOOR, L.DP_MA_DEN_FLOOR),
        (IP_WINDOW, L.IP_WINDOW),
        (M_IR_IM, L.M_IR_IM),
        (OF_MA_LAST, L.OF_MA_LAST),
        (OI_N_DONE, L.OI_N_DONE),
        (T_I_MAG, L.T_I_MAG),
        (FAULT_FROZEN, L.FAULT_FROZEN),
        (FAULT_DELAY_MODE, L.FAULT_DELAY),
        (MASK_SENDING, L.MASK_SENDING),
        (MASK_RECEIVING, L.MASK_RECEIVING),
    ]
    for ours, theirs in pairs:
        if ours != theirs:
            raise ImportError("kernel slot layout drifted from _kernel_layout")


_check_layout()
