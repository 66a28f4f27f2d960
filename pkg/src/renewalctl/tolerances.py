"""Reference numbers for the two worked examples and the tolerances used to compare them.

Each entry is (reference value, absolute tolerance).  ``reproduce`` and the
acceptance tests read this table and nothing else.
"""

GEN_PROFITS = {
    (0, 0): (-19.97, 0.05),
    (1, 0): (3.13, 0.05),
    (0, 1): (8.22, 0.05),
    (1, 1): (3.13, 0.05),
}
GEN_COEFFS = {
    (0, 0): (-19.97, 0.05),
    (1, 0): (23.10, 0.05),
    (0, 1): (28.18, 0.05),
    (1, 1): (-28.18, 0.05),
}
GEN_ARGMAX = (0.0, 1.0)          # compared exactly
GEN_MAX = (8.21, 0.05)

PERIODIC_COEFFS = {
    (0, 0): (3.65, 0.05),
    (1, 0): (0.46, 0.05),
    (0, 1): (-0.88, 0.05),
    (1, 1): (1.11, 0.05),
    (2, 0): (-1.06, 0.05),
    (0, 2): (0.46, 0.05),
}
PERIODIC_ARGMAX = ((0.74, 0.02), (1.00, 0.02))
PERIODIC_MAX = (3.81, 0.05)

# structural properties
MULTIAFFINE_PREDICTION_REL = 1e-6
TOTAL_DEGREE_PREDICTION_REL = 1e-6
DEGREE3_COEFF_ABS = 1e-6
DEGREE_CEILING_ABS = 1e-8
STABILIZING_PREDICTION_REL = 1e-5
POSITIVITY_FLOOR = -1e-10
LINEARITY_REL = 1e-10
ORDER_RATIO = (1.6, 2.4)

# runtime budgets in seconds
GEN_RUNTIME = 5.0
PERIODIC_RUNTIME = 10.0


def within(value: float, ref: tuple[float, float]) -> bool:
    return abs(value - ref[0]) <= ref[1]
