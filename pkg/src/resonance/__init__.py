"""Solvability checks and Lyapunov-Schmidt solvers for resonant boundary value problems."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DimensionError,
    EvaluationError,
    MultiplicityError,
    NonOrthogonalForcing,
    ResonanceError,
    ResonantModeNonOrthogonal,
    SpecificationError,
    UnsupportedSystemError,
)
from .nonlinearity import Nonlinearity, lift, make_nonlinearity, validate_nonlinearity  # noqa: E402
from .problem import ForcingSpec, ProblemSpec  # noqa: E402
from .spectral import Domain, Field, SpectralBasis, build_basis, make_basis, resolvent_solve  # noqa: E402
from .solvability import (  # noqa: E402
    ConditionReport,
    check_problem,
    fn_sign_check,
    korman_li_check,
    landesman_lazer_interval,
    lazer_leach_check,
    cosine_sign_split,
    williams_margin,
)
from .engine import SolveOptions, SolveReport, residual, solve  # noqa: E402
from .systems import canonical_reduce, classify_system, solve_linear_system  # noqa: E402
from .config import dump_spec, load_spec, parse_spec  # noqa: E402
from .manufactured import manufacture  # noqa: E402
