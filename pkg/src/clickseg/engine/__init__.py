from clickseg.engine.clicker import (
    MisleadingSchedule,
    apply_misleading_click,
    make_misleading_schedule,
    simulate_next_click,
)
from clickseg.engine.roi import compute_roi
from clickseg.engine.session import (
    InteractionConfig,
    SessionResult,
    SessionState,
    create_session,
    mask_iou,
    run_interaction_step,
    run_session,
)

__all__ = [
    "InteractionConfig",
    "MisleadingSchedule",
    "SessionResult",
    "SessionState",
    "apply_misleading_click",
    "compute_roi",
    "create_session",
    "make_misleading_schedule",
    "mask_iou",
    "run_interaction_step",
    "run_session",
    "simulate_next_click",
]
