"""qcommit: simulator and numerical verifier for relativistic quantum bit
commitment by light-speed qudit routing.

Subpackages by concern: exact Minkowski geometry (spacetime), the qudit
state engine (qudit), optimal-cloning security bounds (cloning), the
commitment session machine (protocol), cheating strategies (adversary),
loss-tolerant redundancy (robustness), chained and dual protocols
(chaining), and the scenario CLI (cli).
"""

from ._kernels import BACKEND as kernel_backend
from .chaining import (
    ChainVerdict,
    DualFinal,
    chain_commit,
    dual_commit,
    dual_unveil,
    unveil_chain,
)
from .cloning import (
    AsymmetryParams,
    BoundReport,
    CloneOutput,
    asymmetric_clone,
    bound_sum_fidelity,
    optimal_fidelity_sum,
    randomized_attack_search,
    symmetric_clone,
    symmetrize,
)
from .protocol import (
    AliceStrategy,
    SessionConfig,
    Transcript,
    TransportMode,
    Verdict,
    bob_view_before_unveil,
    honest_strategy,
    ideal_1d_config,
    run_session,
    validate_config,
)
from .qudit import (
    DensityMatrix,
    PureState,
    TeleportResource,
    WeylOperator,
    fidelity_with_pure,
    haar_random_state,
    projective_verify,
    teleport,
    weyl,
)
from .robustness import (
    NoiseModel,
    RedundancyParams,
    cheat_epsilon,
    collective_attack_probe,
    honest_accept_probability,
    run_redundant_session,
)
from .spacetime import (
    CausalRelation,
    Event,
    LightDirection,
    causal_order,
    committed_region_excludes,
    generate_directions,
    interval_squared,
    point_on_ray,
)

__version__ = "0.1.0"
