"""Array-layout contract between the run driver and the simulation kernels.

Both kernel implementations (the compiled extension and the pure-Python
fallback) consume the same flat parameter arrays; the index names below are
the single source of truth for what lives where.  The driver packs, the
kernels unpack — nothing here is user-facing.

All floats are float64, all ints are int64, all 2-D arrays C-contiguous.
"""

from __future__ import annotations

# --- dp: float64 scalar parameters ------------------------------------------
DP_DT = 0  # sample period, s
DP_VS_MAG = 1  # source voltage magnitude (angle 0), V
DP_R_REF = 2  # total series resistance at DP_T_REF, ohm
DP_ALPHA = 3  # resistance temperature coefficient, 1/C
DP_T_REF = 4  # resistance reference temperature, C
DP_X0 = 5  # base total series reactance, ohm
DP_B_R_NODE = 6  # shunt susceptance at receiving node (line half + bank), S
DP_B_S_NODE = 7  # shunt susceptance at sending node, S (trace only)
DP_P_LOAD = 8  # received active power, W
DP_Q_LOAD = 9  # received reactive power, var
DP_T_C0 = 10  # initial conductor temperature, C
DP_T_A0 = 11  # base ambient temperature, C (trace bookkeeping; ta array rules)
DP_V_W = 12  # wind speed, m/s
DP_ELEVATION = 13  # elevation, m
DP_Q_SOLAR = 14  # absorbed solar power, W/m
DP_DIAM = 15  # conductor diameter, m
DP_EMISS = 16  # emissivity
DP_M_CP = 17  # heat capacity per length, J/(m.C)
DP_LEN_M = 18  # segment length, m (for per-metre resistance)
DP_V_MAG_LIM = 19  # voltage magnitude error bound, fraction
DP_I_MAG_LIM = 20  # current magnitude bound above low range, fraction
DP_I_MAG_LIM_LOW = 21  # current magnitude bound in low range, fraction
DP_I_LOW_THR_SQ = 22  # low-range boundary squared, A^2
DP_ANG_LIM_RAD = 23  # angle error bound, rad
DP_TVE_LIM = 24  # total vector error bound, fraction
DP_RATIO_MARGIN = 25  # detector ratio margin
DP_STEP_THRESH = 26  # detector restart threshold, relative jump
DP_DEN_EPS_REL = 27  # tan-delta denominator floor, relative
DP_MA_DEN_FLOOR = 28  # ratio denominator magnitude floor
DP_SIZE = 29

# --- ip: int64 scalar parameters ---------------------------------------------
IP_N = 0  # number of samples
IP_NOISE_IID = 1  # 0: one noise row for the run; 1: one row per sample
IP_WANT_TRACE = 2  # 0/1: fill the trace array
IP_FAULT_MODE = 3  # 0 none, 1 frozen, 2 delay
IP_FAULT_ONSET = 4  # fault onset, sample index
IP_FAULT_DELAY = 5  # delay depth, samples (mode 2)
IP_FAULT_MASK = 6  # bit 0: sending stream (v_s); bit 1: receiving stream (v_r, i_r)
IP_LAG1 = 7  # ratio denominator lag, samples
IP_LAG_A = 8  # fastest numerator lag, samples
IP_LAG_B = 9  # middle numerator lag, samples
IP_LAG_C = 10  # slowest numerator lag, samples (also the ma ring span)
IP_WINDOW = 11  # moving-average window, samples
IP_SIZE = 12

FAULT_NONE = 0
FAULT_FROZEN = 1
FAULT_DELAY = 2

MASK_SENDING = 1
MASK_RECEIVING = 2

# --- meas workspace columns: measured phasors, one row per sample ------------
M_VS_RE, M_VS_IM, M_VR_RE, M_VR_IM, M_IR_RE, M_IR_IM = range(6)
MEAS_COLS = 6

# --- out_f: float64 results ---------------------------------------------------
OF_T_C_END = 0
OF_T_C_START = 1
OF_TAN_TRUE_START = 2
OF_TAN_TRUE_END = 3
OF_P_R0 = 4  # true received P at the first sample, W
OF_Q_R0 = 5  # true received Q at the first sample, var
OF_I_RMS0 = 6  # true series current magnitude at the first sample, A
OF_MA_LAST = 7  # last moving-average value (NaN if never formed)
OUT_F_SIZE = 8

# --- out_i: int64 results ------------------------------------------------------
OI_TRIP1 = 0  # control-1 trip sample index, -1 if none
OI_TRIP2 = 1  # control-2 trip sample index, -1 if none
OI_RESTART_COUNT = 2
OI_FIRST_RESTART = 3  # -1 if none
OI_INVALID_COUNT = 4  # singular tan-delta samples
OI_INFEASIBLE_AT = 5  # sample where the solve failed and the run stopped, -1 if never
OI_N_DONE = 6  # samples actually processed
OUT_I_SIZE = 7

# --- trace columns (when IP_WANT_TRACE) ---------------------------------------
T_TA = 0
T_TC = 1
T_R = 2
T_X = 3
T_TAN_TRUE = 4
T_TAN_MEAS = 5  # NaN on singular samples
T_TAN_HELD = 6  # singular samples hold the previous valid value
T_MA = 7
T_RATIO_A = 8
T_RATIO_B = 9
T_RATIO_C = 10
T_I_MAG = 11  # true series current magnitude, A
TRACE_COLS = 12
