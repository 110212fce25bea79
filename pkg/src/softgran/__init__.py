"""Soft granulation toolkit: SOM crisp granules, TSK neuro-fuzzy and rough-set
granules, and the SONFIS / SORST balancing hybrids."""

from .data import (UNRECOGNIZED, Attribute, DecisionTable, TrainTestSplit, decode_twr,
                   encode_twr, load_decision_table, mse_classification, rmse, split_train_test)
from .nfis import SubtractiveConfig, TskModel, infer, subtractive_cluster, train_tsk
from .rst import RoughRule, RoughRuleSet, classify, induce_rules
from .som import SomGrid, SomTopology, crisp_granulate, train_som
from .sonfis import SonfisConfig, grid_dims, next_neuron_count, run_sonfis
from .sorst import SorstConfig, run_sorst

__version__ = "0.1.0"
