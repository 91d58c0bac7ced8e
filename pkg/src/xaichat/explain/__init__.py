from .anchors import AnchorConfig, AnchorRule, Predicate, find_anchor
from .attribution import (
    Attribution,
    ShapConfig,
    SingularSystemError,
    exact_shapley,
    kernel_shap,
)
from .counterfactual import (
    CfConfig,
    CfConstraints,
    CfNotFound,
    Counterfactual,
    constrained_counterfactual,
    counterfactuals,
)

__all__ = [
    "AnchorConfig",
    "AnchorRule",
    "Attribution",
    "CfConfig",
    "CfConstraints",
    "CfNotFound",
    "Counterfactual",
    "Predicate",
    "ShapConfig",
    "SingularSystemError",
    "constrained_counterfactual",
    "counterfactuals",
    "exact_shapley",
    "find_anchor",
    "kernel_shap",
]
