"""Multi-capacity fixed-charge network flow toolkit.

A matheuristic genetic algorithm whose organisms are fixed-cost divisor
arrays decoded by an exact min-cost-flow solve, plus an internal
branch-and-bound for proven optima and solution polishing.
"""
from .evaluate import (FLOW_TOL, VERIFY_TOL, ScoredSolution, score, verify_flow,
                       write_solution_csv)
from .exact import (GAP_DEFAULT, BnBNode, ExactResult, brute_force, polish,
                    solve_exact)
from .flowcore import (D_MIN, UNBOUNDED, Arc, ArcNetwork, FlowIterationError,
                       FlowSolution, Infeasible, Organism,
                       build_expanded_network, lp_relaxation_bound,
                       max_throughput, solve_min_cost_flow)
from .ga import (GAConfig, IterationRecord, RunResult, crossover, evolve,
                 fitness, init_population, mutate, theorem_d,
                 tournament_select, write_convergence_csv)
from .instance import (CostParams, FacilityInstance, Instance, ParseError,
                       Terminal, ValidationError, from_facility_form,
                       format_instance, generate_random, invariant_violations,
                       load_facility_instance, load_instance, parse_instance,
                       save_facility_instance, save_instance, validate)

__all__ = [
    "Arc", "ArcNetwork", "BnBNode", "CostParams", "D_MIN", "ExactResult",
    "FLOW_TOL", "FacilityInstance", "FlowIterationError", "FlowSolution",
    "GAConfig", "GAP_DEFAULT", "Infeasible", "Instance", "IterationRecord",
    "Organism", "ParseError", "RunResult", "ScoredSolution", "Terminal",
    "UNBOUNDED", "VERIFY_TOL", "ValidationError", "brute_force",
    "build_expanded_network", "crossover", "evolve", "fitness",
    "format_instance", "from_facility_form", "generate_random",
    "init_population", "invariant_violations", "load_facility_instance",
    "load_instance", "lp_relaxation_bound", "max_throughput", "mutate",
    "parse_instance", "polish", "save_facility_instance", "save_instance",
    "score", "solve_exact", "solve_min_cost_flow", "theorem_d",
    "tournament_select", "validate", "verify_flow", "write_convergence_csv",
    "write_solution_csv",
]
