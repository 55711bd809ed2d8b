# Licensed to the Apache Software Foundation (ASF) under one
# or more contributor license agreements.  See the NOTICE file
# distributed with this work for additional information
# regarding copyright ownership.  The ASF licenses this file
# to you under the Apache License, Version 2.0 (the
# "License"); you may not use this file except in compliance
# with the License.  You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing,
# software distributed under the License is distributed on an
# "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, either express or implied.  See the License for the
# specific language governing permissions and limitations
# under the License.
"""Learned cost models for tensor-program tuning."""

from ._core import (
    CostModel,
    DataError,
    Dataset,
    Error,
    NumericError,
    SplitAssignment,
    __version__,
    adapt_hardware,
    builtin_targets,
    evaluate,
    gen_dataset,
    load_dataset,
    pairwise_comparison_accuracy,
    prune,
    ranking_loss,
    rmse,
    run_cli,
    split,
    top_k_score,
    train,
    tune,
)

__all__ = [
    "CostModel",
    "DataError",
    "Dataset",
    "Error",
    "NumericError",
    "SplitAssignment",
    "__version__",
    "adapt_hardware",
    "builtin_targets",
    "evaluate",
    "gen_dataset",
    "load_dataset",
    "pairwise_comparison_accuracy",
    "prune",
    "ranking_loss",
    "rmse",
    "run_cli",
    "split",
    "top_k_score",
    "train",
    "tune",
]
