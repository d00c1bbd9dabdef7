"""npcharm: discrete harmonic maps into non-positively curved targets."""

from ._kernels import HAVE_COMPILED, backend_name
from .errors import (
    ConvergenceError,
    DomainError,
    InvariantViolation,
    NpcharmError,
    UsageError,
)
from .spaces import (
    Euclidean,
    HyperbolicPlane,
    MobiusMap,
    NpcSpace,
    Pod,
    PodPoint,
    RayPermutation,
    RigidMotion,
    SLAction,
    Spd,
    check_quadrilateral,
    check_triangle_comparison,
    comparison_suite,
    make_space,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED", "backend_name", "__version__",
    "NpcharmError", "UsageError", "DomainError", "ConvergenceError",
    "InvariantViolation",
    "NpcSpace", "Euclidean", "HyperbolicPlane", "Spd", "Pod", "PodPoint",
    "RigidMotion", "MobiusMap", "SLAction", "RayPermutation",
    "make_space", "check_triangle_comparison", "check_quadrilateral",
    "comparison_suite",
]
