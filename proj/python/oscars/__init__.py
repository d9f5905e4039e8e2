# Copyright 2026 The OSCARS Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Outlier-sensitive embedding retrieval.

Thin Python surface over the C++ core: record stores, kNN anomaly
scoring with exact 1-D k-means binning, quadruplet sampling, projection
head training and cosine retrieval with recall / precision / sensitivity.
"""

from ._oscars import (
    AnomalyScorer,
    BinModel,
    DataError,
    Dataset,
    DatasetManifest,
    LossConfig,
    NumericError,
    OscarsError,
    ProjectionHead,
    Record,
    RetrievalIndex,
    TrainConfig,
    ValidationError,
    assign_bins,
    build_index,
    elbow_select_b,
    evaluate,
    filter_by_class,
    fit_scorer,
    forward,
    kmeans_1d,
    load_head,
    load_index,
    load_jsonl,
    load_store,
    loss_gradients,
    quadruplet_loss,
    sample_quadruplets,
    save_head,
    save_index,
    save_store,
    score_records,
    sigmoid_scale,
    synthesize,
    train,
    validate_quadruplets,
)

__version__ = "0.1.0"
