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
"""Smoke tests for the Python bindings."""

import itertools
import random

import pytest

import tensortune as tt


def brute_force_pca(y, y_hat):
    pairs = list(itertools.combinations(range(len(y)), 2))
    agree = sum((y[i] > y[j]) == (y_hat[i] > y_hat[j]) for i, j in pairs)
    return agree / len(pairs)


def test_pca_matches_brute_force():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randint(2, 20)
        y = [rng.randint(0, 3) for _ in range(n)]
        y_hat = [rng.randint(0, 3) for _ in range(n)]
        assert tt.pairwise_comparison_accuracy(y, y_hat) == brute_force_pca(y, y_hat)


def test_metrics_reject_bad_input():
    with pytest.raises(tt.DataError):
        tt.pairwise_comparison_accuracy([1.0], [1.0])
    assert issubclass(tt.DataError, tt.Error)


def test_pipeline(tmp_path):
    ds = tt.gen_dataset(8, 20, seed=2)
    assert ds.num_tasks == 8 and ds.num_records == 160
    pruned, report = tt.prune(ds, fraction=0.6, seed=2)
    assert report["records_after"] == pruned.num_records
    assert pruned.num_records >= 0.6 * ds.num_records

    sp = tt.split(pruned, "within_task", 0.2, seed=2)
    assert not (sp.train_ids & sp.test_ids)
    assert tt.SplitAssignment.from_dict(sp.to_dict()).test_ids == sp.test_ids

    model, train_report = tt.train("gbdt", pruned, sp, {"num_trees": 20})
    assert model.kind == "gbdt"
    assert train_report["final_train_rmse"] <= train_report["initial_train_rmse"]
    metrics = tt.evaluate(model, pruned, sp)
    assert 0.0 <= metrics["test"]["pca"] <= 1.0

    path = str(tmp_path / "m.bin")
    model.save(path)
    again = tt.CostModel.load(path)
    assert tt.evaluate(again, pruned, sp) == metrics

    result = tt.tune(pruned, model, search={"top_k": 2, "steps": 32})
    assert result["oracle_calls"] == 2 * pruned.num_tasks


def test_dataset_round_trip(tmp_path):
    ds = tt.gen_dataset(3, 5, seed=9)
    path = str(tmp_path / "d.ds")
    ds.save(path)
    back = tt.load_dataset(path)
    assert back == ds
    assert back.fingerprint() == ds.fingerprint()


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(tt.DataError):
        tt.load_dataset(str(tmp_path / "missing.ds"))


def test_cli_entry():
    code, out, _ = tt.run_cli(["hw", "list"])
    assert code == 0
    assert "t4" in out
    assert "t4" in tt.builtin_targets()
    code, _, _ = tt.run_cli(["nonsense"])
    assert code == 1
