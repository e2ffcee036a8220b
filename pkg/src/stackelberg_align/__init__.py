"""Solver and simulator for the user-algorithm alignment Stackelberg game."""

from .domain import (
    Content,
    Entry,
    EntryMode,
    Group,
    Scenario,
    StrategyProfile,
    TypeStrategy,
    UserTypeParams,
    load_profile,
    load_scenario,
    validate_profile,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Content",
    "Entry",
    "EntryMode",
    "Group",
    "Scenario",
    "StrategyProfile",
    "TypeStrategy",
    "UserTypeParams",
    "load_profile",
    "load_scenario",
    "validate_profile",
    "validate_scenario",
]
