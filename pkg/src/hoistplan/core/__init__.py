from .io import dump_instance, instance_from_dict, instance_to_dict, load_instance
from .model import (
    ACTION_NAMES,
    MOVE,
    PICKUP,
    PUTDOWN,
    Hoist,
    Instance,
    InstanceError,
    Move,
    PickUp,
    Plan,
    Product,
    PutDown,
    Recipe,
    Tank,
    TankKind,
    TimedAction,
    hoist_name,
    product_name,
    tank_name,
    transport_time,
)
from .state import (
    ActionError,
    WorldState,
    advance,
    apply_action,
    check_start,
    held,
    holder,
    initial_state,
    overall_ok,
    replay,
    required_duration,
    set_moving,
    set_tank_available,
    span,
    start_action,
    state_violations,
    timed,
)
from .validate import ValidationReport, Violation, validate_plan, validate_processing
