from ceps.vrpspdtw.evaluate import (
    PANC_PENALTY,
    RouteSchedule,
    Violation,
    VrpSolution,
    evaluate_solution,
    panc,
    route_cost,
    schedule_route,
)
from ceps.vrpspdtw.instance import (
    Customer,
    Depot,
    Fleet,
    VrpInstance,
    load_instance_dir,
    read_vrp,
    sample_instance,
    synthetic_pool,
    write_vrp,
)
from ceps.vrpspdtw.mutate import mutate_vrp
from ceps.vrpspdtw.solver import (
    VRP_SPACE,
    WORK_UNITS_PER_SECOND,
    baseline_search,
    baseline_solve,
)

__all__ = [
    "Customer",
    "Depot",
    "Fleet",
    "PANC_PENALTY",
    "RouteSchedule",
    "VRP_SPACE",
    "Violation",
    "VrpInstance",
    "VrpSolution",
    "WORK_UNITS_PER_SECOND",
    "baseline_search",
    "baseline_solve",
    "evaluate_solution",
    "load_instance_dir",
    "mutate_vrp",
    "panc",
    "read_vrp",
    "route_cost",
    "sample_instance",
    "schedule_route",
    "synthetic_pool",
    "write_vrp",
]
