"""Functional John ellipsoids: fixtures, the I_nu minimiser and the r -> 1 sweep.

Instances are plain dicts following the schema in the README; every command
returns ``(report, exit_code)`` with the same report layout as the ``fjohn``
executable.
"""

import json

from ._core import F, F_prime, FjohnError, exit_code
from . import _core

__all__ = [
    "F",
    "F_prime",
    "FjohnError",
    "error_kind",
    "exit_code",
    "fixture",
    "instance_hash",
    "run",
    "sweep_csv",
]

COMMANDS = ("verify", "contacts", "minimize-i1", "coercivity", "sweep-r", "profiles-check")


def _text(instance):
    return instance if isinstance(instance, str) else json.dumps(instance)


def fixture(name, n=1, s=1.0, rho1sq=0.4, rho2sq=0.8, points=()):
    """Instance dict for ``cross``, ``two-level-cross``, ``star`` or ``tangent``."""
    pts = [list(p) if hasattr(p, "__len__") else [float(p)] for p in points]
    return json.loads(_core.fixture_json(name, n, s, rho1sq, rho2sq, pts))


def run(command, instance, seed=None, dirs=None):
    """Run one of COMMANDS; returns ``(report_dict, exit_code)``."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}; expected one of {COMMANDS}")
    text, code = _core.run_json(command, _text(instance), seed, dirs)
    return json.loads(text), code


def sweep_csv(instance):
    return _core.sweep_csv(_text(instance))


def instance_hash(instance):
    return _core.instance_hash(_text(instance))


def error_kind(exc):
    """Kind name carried by a FjohnError (``"InfeasibleWeights"``, ...)."""
    return str(exc).split(":", 1)[0]
