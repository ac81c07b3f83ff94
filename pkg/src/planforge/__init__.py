"""planforge: controllable vector floor-plan generation with conditional diffusion."""

from .plans import (
    CANVAS,
    MAX_ROOMS,
    ROOM_TYPES,
    BoundaryCondition,
    FloorPlan,
    Room,
    canonical_order,
    decode_plan,
    encode_condition,
    encode_plan,
    load_plan,
    pad_boundary,
    plan_from_dict,
    plan_to_dict,
    save_plan,
)

__version__ = "0.1.0"
