# Shared/__init__.py
# Numerical tolerances and capacities used across the lab.

BALANCE_RTOL = 1e-12  # |total(mu) - total(nu)| / total(mu)
MARGINAL_RTOL = 1e-12
DUAL_ATOL = 1e-9
ARCLENGTH_RTOL = 1e-9

SOLVER_CAPACITY = 25_000  # atoms per side; dense cost matrix is n*m doubles
SOLVER_MAX_ITER = 100_000_000

MIN_CURVE_SAMPLES = 8
DEFAULT_CURVE_SAMPLES = 2048

# |xi| below this uses the even Taylor series of the per-ray cost
SERIES_XI = 0.05
