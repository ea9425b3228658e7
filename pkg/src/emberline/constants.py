"""Physical constants used by the conductor heat-balance model.

Everything the thermal update needs beyond per-conductor data lives here so
that a reviewer can audit (and, if needed, adjust) the correlation set in one
place.  The correlations are the standard bare-overhead-conductor set:

* film air properties evaluated at ``(t_surface + t_ambient) / 2``
* forced convection, low-Reynolds branch ``(1.01 + 1.35 Re^0.52) k_f dT``
* natural convection ``3.645 rho_f^0.5 D^0.75 dT^1.25``
* radiation ``17.8 D e [((Ts+273)/100)^4 - ((Ta+273)/100)^4]``

with the conductor diameter ``D`` in metres and all heat terms in W/m.
Convective exchange is applied sign-symmetrically: when the surrounding air
is hotter than the conductor (the fire case) the same correlations transfer
heat *into* the conductor.
"""

# Thermal conductivity of air, W/(m.C), polynomial in film temperature (C).
AIR_K_C0 = 2.424e-2
AIR_K_C1 = 7.477e-5
AIR_K_C2 = -4.407e-9

# Dynamic viscosity of air, kg/(m.s): MU_C * (Tfilm_K)^1.5 / (Tfilm_C + MU_OFF).
AIR_MU_C = 1.458e-6
AIR_MU_OFF = 383.4

# Air density, kg/m^3:
#   (RHO_N0 + RHO_N1*He + RHO_N2*He^2) / (1 + RHO_D * Tfilm_C),
# He = elevation above sea level in metres.
AIR_RHO_N0 = 1.293
AIR_RHO_N1 = -1.525e-4
AIR_RHO_N2 = 6.379e-9
AIR_RHO_D = 0.00367

# Forced convection (low-Reynolds branch), per unit length.
FORCED_CONV_A = 1.01
FORCED_CONV_B = 1.35
FORCED_CONV_EXP = 0.52

# Natural convection, per unit length.
NATURAL_CONV_C = 3.645
NATURAL_CONV_DIAM_EXP = 0.75
NATURAL_CONV_DT_EXP = 1.25

# Radiation, per unit length (diameter in metres).
RADIATION_C = 17.8
KELVIN_OFFSET = 273.0

# Celsius-to-Kelvin offset used by the film-property viscosity correlation.
MU_KELVIN_OFFSET = 273.0

# Electrical defaults for the shipped 138 kV study system.
DEFAULT_VOLTAGE_LL = 138e3
DEFAULT_VOLTAGE_PHASE = DEFAULT_VOLTAGE_LL / 3**0.5  # per-conductor base, V
DEFAULT_FREQUENCY_HZ = 60.0
DEFAULT_SAMPLE_RATE_HZ = 5000.0

# Current base used when normalising phasors for the detector and when
# expressing loading as a fraction of the tested rating.  The sweep dimension
# for line current tops out at 1.6 kA, so loading percentages are taken
# against that ceiling (configurable in sweep configs).
DEFAULT_RATING_CURRENT_A = 1600.0

# Nominal (instrument) current used by the two-class current error envelope.
DEFAULT_NOMINAL_CURRENT_A = 2100.0
