// Copyright 2026 The EVA Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVA_EVA_HPP_
#define EVA_EVA_HPP_

#include "eva/agent.hpp"
#include "eva/approximator.hpp"
#include "eva/checkpoint.hpp"
#include "eva/common.hpp"
#include "eva/config.hpp"
#include "eva/gridworld.hpp"
#include "eva/harness.hpp"
#include "eva/io.hpp"
#include "eva/mlp.hpp"
#include "eva/nn_index.hpp"
#include "eva/replay_memory.hpp"
#include "eva/trace_computation.hpp"
#include "eva/train_batch.hpp"
#include "eva/value_buffer.hpp"

#endif  // EVA_EVA_HPP_
