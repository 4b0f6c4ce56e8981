"""Symmetry analysis for stochastic differential equations."""

from .convert import apply_group_element, convert, persistence_condition, to_ito, to_stratonovich
from .deteq import build_residuals, check_symmetry, find_symmetries_ansatz
from .model import SdeSystem, VectorField, classify, lie_bracket, load_model, load_model_file
from .transform import change_of_vars, kozlov, modified_kozlov, post_transform_check

__all__ = [
    "SdeSystem", "VectorField", "apply_group_element", "build_residuals", "change_of_vars",
    "check_symmetry", "classify", "convert", "find_symmetries_ansatz", "kozlov", "lie_bracket",
    "load_model", "load_model_file", "modified_kozlov", "persistence_condition",
    "post_transform_check", "to_ito", "to_stratonovich",
]
__version__ = "0.1.0"
