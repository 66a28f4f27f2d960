"""Age-structured (J, S, R) renewal equations with piecewise-constant controls.

Juveniles J mature at age abar and are split by the control eta into a
market stock S and a reproducing stock R; a fraction 1 - theta_i of S is sold
at each sell age.  The package solves the system, evaluates profit
functionals, reconstructs the profit as an explicit polynomial in the control
values and maximizes it.
"""

from .characteristics import (GenerationClock, characteristic_age, characteristic_time,
                              generation_times, psi_factor)
from .controls import (ExplicitLayout, FixedLayout, GenerationalLayout, PeriodicLayout,
                       StabilizingLayout)
from .functionals import cost, income, profit, quadratic_J_term
from .optimizer import Optimum, maximize_bangbang, maximize_box
from .oracle import solve_upwind_oracle
from .pipeline import ProfitEvaluator
from .polyfit import (FitPlan, ProfitPolynomial, build_stabilizing_basis, evaluate,
                      fit_multiaffine, fit_stabilizing, fit_tensor, fit_total_degree, holdout)
from .rates import Fertility, Profile, RateField
from .scenario import (ControlSchedule, EconomicData, InitialData, PiecewiseConstant,
                       Scenario, ValuePolynomial, constant_rates)
from .scenario_file import load_scenario, parse_scenario
from .solver import Trajectory, boundary_trace, solve

__version__ = "0.1.0"
