"""Exact two-stage robust optimization with binary uncertainty via penalized Lagrangian duals."""
from lagro.engine import Report, ccg_inner, solve_with_restarts
from lagro.instances import load_instance, save_instance
from lagro.model import GeneralInstance, IndicatorInstance, UncertaintySet

__all__ = [
    "GeneralInstance",
    "IndicatorInstance",
    "Report",
    "UncertaintySet",
    "ccg_inner",
    "load_instance",
    "save_instance",
    "solve_with_restarts",
]
