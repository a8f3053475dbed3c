"""Vaidya's volumetric-barrier cutting-plane method with minibatched
stochastic subgradient oracles, plus a projected-SGD baseline and an
experiment CLI."""

from .baseline import SgdConfig, project_ball, run_sgd
from .cutting_plane import (
    CutKind,
    CutResponse,
    RunResult,
    RunTrace,
    VaidyaConfig,
    choose_beta,
    iterations_needed,
    run_vaidya,
    theorem1_bound,
    vaidya_step,
)
from .geometry import (
    BarrierState,
    Polytope,
    add_constraint,
    barrier_hessian,
    barrier_state,
    box_polytope,
    drop_constraint,
    leverage_scores,
    slacks,
    volumetric_center,
    volumetric_gradient,
    volumetric_value,
)
from .problems import (
    BallSet,
    Dataset,
    ExactCutOracle,
    LogisticOracle,
    NoisyMaxAffineOracle,
    NoisyQuadraticOracle,
    StochasticCutOracle,
    SyntheticProblem,
    SyntheticSpec,
    ball_membership,
    ball_separation,
    load_csv,
    logistic_loss,
    logistic_prob,
    logistic_subgrad,
    make_initial_box,
    make_logistic_synthetic,
    make_synthetic,
    mean_logistic_loss,
    train_test_split,
)
from .stochastic import (
    DeltaCertificate,
    batch_size,
    check_delta_subgradient,
    delta_of_batch,
    derive_seed,
    estimate_value,
    minibatch_subgradient,
    sample_seeds,
)

__version__ = "0.1.0"
