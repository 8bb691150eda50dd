// Copyright 2026 The fraudcnn Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fraudcnn/anomaly.hpp"
#include "fraudcnn/baselines.hpp"
#include "fraudcnn/checkpoint.hpp"
#include "fraudcnn/config.hpp"
#include "fraudcnn/csv.hpp"
#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/explain.hpp"
#include "fraudcnn/features.hpp"
#include "fraudcnn/metrics.hpp"
#include "fraudcnn/model.hpp"
#include "fraudcnn/netpbm.hpp"
#include "fraudcnn/pipeline.hpp"
#include "fraudcnn/rng.hpp"
#include "fraudcnn/synth.hpp"
#include "fraudcnn/tensor.hpp"
#include "fraudcnn/train.hpp"
