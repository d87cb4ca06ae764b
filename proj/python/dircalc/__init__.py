"""Heat-semigroup calculus on finite Dirichlet spaces."""

import json

from . import _dircalc
from ._dircalc import *  # noqa: F401,F403
from ._dircalc import NumericalError, ValidationError  # noqa: F401


def generate(kind, **params):
    return _dircalc.generate(kind, json.dumps(params))


def run_probe(space, spec, tag, params=None, seed=0):
    return json.loads(_dircalc.run_probe(space, spec, tag, json.dumps(params or {}), seed))


def run_suite(spaces, **config):
    return json.loads(_dircalc.run_suite(list(spaces), json.dumps(config)))
