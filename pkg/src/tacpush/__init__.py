"""tacpush: deterministic planar-pushing simulator, tactile dual-loop push
controller and experiment harness."""

from .pose_math import (
    EulerPose,
    Transform,
    compose,
    euler_to_transform,
    inverse,
    transform_to_euler,
)
from .push_controller import ControllerConfig, ControllerState, Status, control_step
from .push_dynamics import (
    ContactMode,
    ContactState,
    PhysicsFault,
    Twist2,
    limit_surface_twist,
    motion_cone,
    resolve_substep,
    simulate_tap,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .scene import (
    ObjectShape,
    PlanarPose,
    PusherTip,
    WorldState,
    builtin_shapes,
    closest_boundary_point,
)
from .tactile_sense import NoiseModel, PosePrediction, apply_noise, sense_contact
from .exp_harness import (
    Metrics,
    TrialRecord,
    compute_y_targ,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    run_trial,
)

__version__ = "0.1.0"
