"""Blow-up lifespan laboratory for u_tt - Delta u + mu (1+t)^(-beta) u_t = |u_t|^p.

Radially symmetric finite-difference solver, the exponential test-function
machinery (phi1, psi, multipliers, F1/G/H functionals), closed-form lifespan
bounds from the comparison ODE, and an eps-sweep harness that fits numerical
blow-up times against the predicted scaling exponents.
"""

from ._kernels import DEFAULT_BACKEND, USING_NUMBA
from .functionals import (
    FunctionalEvaluator,
    FunctionalTrace,
    MonitorResult,
    compute_F1,
    compute_G,
    compute_H,
    monitor_G_decay,
    monitor_H_lower,
    monitor_H_ode,
    monitor_lemma_F1,
    run_monitors,
)
from .lifespan import (
    CriticalExponentMarker,
    LifespanBound,
    OdeCoefficients,
    bound_from_run,
    decay_exponent,
    hitting_time_numeric,
    solve_comparison_ode,
    theorem_exponent,
    time_to_level,
)
from .model import (
    DataProfile,
    ModelParams,
    Regime,
    classify,
    critical_exponent,
    effective_dimension,
    make_bump_data,
    surface_measure,
)
from .multipliers import (
    CompactTail,
    ExponentialTail,
    Multiplier,
    PowerTail,
    check_log_derivative,
    m_general,
    m_scale_invariant,
    m_scattering,
)
from .solver import (
    BlowupReport,
    RadialGrid,
    RadialState,
    SpaceTimeBump,
    initial_state,
    run_until_blowup,
    step,
    support_excess_dr,
    weak_residual,
    write_snapshot,
)
from .special import (
    C1Estimate,
    Phi1Evaluator,
    check_psi_identities,
    data_phi1_integral,
    estimate_C1,
    phi1,
    phi1_scaled,
    phi1_sphere_quadrature,
    psi,
    psi_ball_ratio,
)
from .sweep import (
    SweepPlan,
    SweepResult,
    emit_report,
    fit_power_law,
    run_critical_sweep,
    run_sweep,
)

__version__ = "0.1.0"
