"""In-repo interior-point backend for every convex subproblem in the package."""

from .cones import ConeDims
from .problem import CertificateReport, ConicProblem, HermitianVar, check_certificate
from .solver import (
    STATUS_FAILED,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    ConicSolution,
    SolverError,
    SolverOptions,
    solve,
    solve_conelp,
)

__all__ = [
    "ConeDims",
    "ConicProblem",
    "ConicSolution",
    "CertificateReport",
    "HermitianVar",
    "SolverError",
    "SolverOptions",
    "check_certificate",
    "solve",
    "solve_conelp",
    "STATUS_OPTIMAL",
    "STATUS_INFEASIBLE",
    "STATUS_UNBOUNDED",
    "STATUS_FAILED",
]
