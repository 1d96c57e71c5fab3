"""Classical desk-scale simulation of quantum zeroth-order convex optimization.

Layers, bottom to top:

* ``oracles``  : noisy evaluation oracles with strict sup-norm noise bounds,
  query charging, and feasible-set primitives.
* ``geometry`` : mirror maps (euclidean, simplex entropy, spectraplex
  entropy), Bregman machinery, mirror steps.
* ``gradients``: gradient estimation from oracle values: phase-state DFT
  readout, suppressed-bias median wrapper, sampling surrogate, smoothed
  central-difference subgradients, per-estimate query charges.
* ``solvers``  : qpsm, qgd_convex, qgd_pl, qmd, qda, qmp over those
  estimates, emitting auditable traces.
* ``whitebox`` : SDP/LP/zero-sum-game solvers via the eigenvalue-objective
  reduction, dual certificates, instance file formats.
* ``problems`` : built-in instances with exact constants.
* ``harness``  : experiment configs, trace CSVs, rate fitting, regime data.
* ``cli``      : the ``qzero`` command.
"""

from .errors import ConfigError, DomainError, NumericError, ResourceError
from .geometry import (
    MirrorGeometry,
    SymEigResult,
    bregman_divergence,
    bregman_project,
    euclidean_geometry,
    mirror_step,
    simplex_geometry,
    spectraplex_geometry,
    sym_eig,
    three_point_identity_residual,
)
from .gradients import (
    STATE_CAP,
    GradientEstimate,
    GradientEstimator,
    GridSpec,
    SubgradientConfig,
    build_phase_state,
    jordan_measure,
    per_estimate_charge,
    subgradient_estimate,
    suppressed_bias_estimate,
    surrogate_gradient,
    theta_budget_estimate,
)
from .harness import (
    ExperimentConfig,
    SlopeReport,
    SweepResult,
    build_experiment,
    emit_zsg_regimes,
    fit_rate,
    load_config,
    parse_config_text,
    read_trace_csv,
    run_experiment,
    run_sweep,
    write_trace_csv,
)
from .oracles import (
    Box,
    EuclideanBall,
    NormSpec,
    NoisyOracle,
    ObjectiveSpec,
    Simplex,
    Spectraplex,
    project_simplex,
)
from .problems import GAMES, OBJECTIVES, make_game, make_objective
from .solvers import (
    RunTrace,
    SolverConfig,
    TraceRecord,
    expected_charged_queries,
    qda_solve,
    qgd_convex_solve,
    qgd_pl_solve,
    qmd_solve,
    qmp_solve,
    qpsm_solve,
    solve,
    solver_theta_budget,
)
from .whitebox import (
    DualCertificate,
    FeasibilityReport,
    LpInstance,
    SdpInstance,
    ZsgInstance,
    check_dual_feasibility,
    load_certificate,
    load_lp,
    load_sdp,
    load_zsg,
    lp_objective,
    save_certificate,
    save_lp,
    save_sdp,
    save_zsg,
    sdp_eig_objective,
    solve_lp,
    solve_sdp_dual,
    solve_zsg,
)

__version__ = "0.1.0"
