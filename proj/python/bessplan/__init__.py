"""Battery storage siting and market simulation."""

from ._core import Case, DispatchInfeasible, InputError, solve_lp

__all__ = ["Case", "DispatchInfeasible", "InputError", "solve_lp"]
