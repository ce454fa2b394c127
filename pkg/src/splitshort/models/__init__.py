"""Split classifiers, their training routines and the model file format."""
from splitshort.models.base import (
    EPS,
    LabeledExample,
    SplitModel,
    Standardization,
    dumps_model,
    feature_importance,
    load_model,
    loads_model,
    predict,
    save_model,
)
from splitshort.models.constant import ConstantModel, constant_model, train_base_rate
from splitshort.models.ensemble import DEFAULT_MEMBER_KINDS, EnsembleModel, train_ensemble
from splitshort.models.logistic import LogisticL1Model, train_logistic_l1
from splitshort.models.logitboost import LogitBoostModel, train_logitboost
from splitshort.models.tree import DecisionTreeModel, Rule, extract_rules, train_decision_tree

__all__ = [
    "EPS", "LabeledExample", "SplitModel", "Standardization", "dumps_model", "feature_importance",
    "load_model", "loads_model", "predict", "save_model", "ConstantModel", "constant_model",
    "train_base_rate", "DEFAULT_MEMBER_KINDS", "EnsembleModel", "train_ensemble", "LogisticL1Model",
    "train_logistic_l1", "LogitBoostModel", "train_logitboost", "DecisionTreeModel", "Rule",
    "extract_rules", "train_decision_tree",
]
