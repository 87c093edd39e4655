from ceps.tsp.exact import HELD_KARP_MAX_N, held_karp_optimum
from ceps.tsp.instance import (
    CONSENSUS,
    EXACT,
    OPTIMA_FILENAME,
    Tour,
    TspInstance,
    attach_optima,
    euc_2d,
    load_instance_dir,
    load_optima,
    nint,
    read_tsplib,
    save_optima,
    tour_length,
    write_tsplib,
)
from ceps.tsp.solver import (
    TSP_SPACE,
    WORK_UNITS_PER_SECOND,
    certify_optimum,
    ils_best,
    par10,
    penalized_runtime,
    solve,
)

__all__ = [
    "CONSENSUS",
    "EXACT",
    "HELD_KARP_MAX_N",
    "OPTIMA_FILENAME",
    "TSP_SPACE",
    "Tour",
    "TspInstance",
    "WORK_UNITS_PER_SECOND",
    "attach_optima",
    "certify_optimum",
    "euc_2d",
    "held_karp_optimum",
    "ils_best",
    "load_instance_dir",
    "load_optima",
    "nint",
    "par10",
    "penalized_runtime",
    "read_tsplib",
    "save_optima",
    "solve",
    "tour_length",
    "write_tsplib",
]
