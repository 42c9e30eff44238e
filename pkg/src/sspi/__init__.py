"""Exact and sampling checks for single-sample prophet inequalities on uniform matroids."""

__version__ = "0.1.0"

from .core import (
    Assignment,
    DyadicProbability,
    ElementTable,
    Instance,
    ItemPair,
    ModelError,
    build_element_table,
    classify_assignment,
    tiebreak_order,
)
from .mechanism import compute_threshold, prophet_select, run_gambler
from .oracle import (
    ExactResult,
    ResourceCapError,
    adversarial_gambler_gain,
    competitive_check,
    enumerate_pairwise,
    worst_order_check,
)
from .lemmas import (
    Configuration,
    check_claims,
    check_prefix_inequality,
    enumerate_configs,
    gambler_prob_lb,
    prophet_prob,
)
