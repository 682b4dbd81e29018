# Copyright 2026 The cmg-solve Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Policy-gradient solvers for convex Markov games."""

import json as _json

from . import _cmg
from ._cmg import ConfigError, Game, ParameterError, iterated_rpsd, matrix_game

__all__ = [
    "ConfigError",
    "Game",
    "ParameterError",
    "game_from_config",
    "iterated_rpsd",
    "matrix_game",
    "preset",
    "presets",
    "run_experiment",
    "solve",
    "tune",
    "validate",
]


def presets():
    return list(_cmg.presets())


def preset(name):
    return _json.loads(_cmg.preset(name))


def game_from_config(recipe):
    """Builds a game from a recipe such as {"name": "iterated_rpsd"}."""
    return _cmg.game_from_json(_json.dumps(recipe))


def solve(game, config=None):
    """Runs one solver; config uses the "solver" section schema."""
    return _json.loads(game.solve(_json.dumps(config or {})))


def run_experiment(config, jobs=1):
    return _json.loads(_cmg.run_experiment(_json.dumps(config), int(jobs)))


def tune(config):
    return _json.loads(_cmg.tune_report(_json.dumps(config)))


def validate(config):
    """Returns the fully resolved config, raising ConfigError if invalid."""
    return _json.loads(_cmg.validate(_json.dumps(config)))
