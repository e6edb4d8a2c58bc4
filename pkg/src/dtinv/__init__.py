"""Loop invariant inference by learning decision trees over octagon slopes."""

from .pipeline import PipelineConfig, infer_invariant
from .program import parse, parse_pred

__all__ = ["PipelineConfig", "infer_invariant", "parse", "parse_pred"]
__version__ = "0.1.0"
