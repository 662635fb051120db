"""Python bindings for the petc toolkit."""

import json

from . import _petc
from ._petc import (
    ConfigurationError,
    ConstraintViolationError,
    DomainError,
    InfeasibleDesignError,
    PetcError,
    SelectionError,
    SimulationDivergedError,
    builtin_names,
    inter_sample_time,
    integrate_phi,
    max_sampling_period,
    simulate_state,
    solve_lambda,
    trigger_coefficient,
)


def _arg(value):
    if value is None or isinstance(value, str):
        return value
    return json.dumps(value)


def select_parameters(mu, gamma, alpha, h=None, s=None, alpha0=None, d=1.0):
    return json.loads(_petc._select_parameters(mu, gamma, alpha, h, s, alpha0, d))


def check_design(design, lambda_tolerance=-1.0):
    """Returns (ok, message) for a timing tuple given as a dict."""
    return _petc._check_design(json.dumps(design), lambda_tolerance)


def design_state(plant, gains=None, alpha=1.2, h=None, s=None, alpha0=None, max_iter=0):
    """plant is "example2" or a plant dict; gains is None (synthesize), "builtin" or a dict."""
    return json.loads(_petc._design_state(_arg(plant), _arg(gains), alpha, h, s, alpha0, max_iter))


def design_output(plant, observer, alpha=1.1, h=None, s=None):
    return json.loads(_petc._design_output(_arg(plant), _arg(observer), alpha, h, s))


def verify_published_example2(rel_tol=1e-6):
    return json.loads(_petc._verify_published_example2(rel_tol))


def monte_carlo(name, h, runs=100, seed=1, threads=0):
    return json.loads(_petc._monte_carlo(name, list(h), runs, seed, threads))


__all__ = [
    "ConfigurationError",
    "ConstraintViolationError",
    "DomainError",
    "InfeasibleDesignError",
    "PetcError",
    "SelectionError",
    "SimulationDivergedError",
    "builtin_names",
    "check_design",
    "design_output",
    "design_state",
    "integrate_phi",
    "inter_sample_time",
    "max_sampling_period",
    "monte_carlo",
    "select_parameters",
    "simulate_state",
    "solve_lambda",
    "trigger_coefficient",
    "verify_published_example2",
]
