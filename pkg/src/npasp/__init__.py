"""Neural-probabilistic answer set programs: parse, ground, infer and learn."""

from .errors import (CapExceeded, DataError, GroundingError, InferenceError, LearningError,
                     NpaspError, ParseError, SemanticsError, ValidationError)
from .grounder import GroundProgram, ground
from .inference import Engine, QueryResult, infer
from .learning import LearnConfig, Learner, learn
from .loader import compile_program, load_observations, load_program, load_text
from .parser import parse
from .semantics import Interpretation, ModelSet, models

__version__ = "0.1.0"

__all__ = [
    "CapExceeded", "DataError", "Engine", "GroundProgram", "GroundingError", "InferenceError",
    "Interpretation", "LearnConfig", "Learner", "LearningError", "ModelSet", "NpaspError",
    "ParseError", "QueryResult", "SemanticsError", "ValidationError", "compile_program", "ground",
    "infer", "learn", "load_observations", "load_program", "load_text", "models", "parse",
]
