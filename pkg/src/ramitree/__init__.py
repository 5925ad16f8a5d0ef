"""Exact computations in finite quotients of Grigorchuk groups."""

from .engine import Budget, CapExceeded, GroupSnapshot
from .omega import OmegaSeq, parse_omega
from .ramify import build_tuples, verify_theorem
from .treeauto import TreeAut, identity, rooted_swap

__all__ = [
    "Budget",
    "CapExceeded",
    "GroupSnapshot",
    "OmegaSeq",
    "TreeAut",
    "build_tuples",
    "identity",
    "parse_omega",
    "rooted_swap",
    "verify_theorem",
]
__version__ = "0.1.0"
