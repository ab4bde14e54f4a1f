/*
 * Copyright 2026 The compfair Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COMPFAIR_COMPFAIR_HPP_
#define COMPFAIR_COMPFAIR_HPP_

#include "compfair/analysis.hpp"
#include "compfair/clustering.hpp"
#include "compfair/csv.hpp"
#include "compfair/dataset.hpp"
#include "compfair/error.hpp"
#include "compfair/fairness.hpp"
#include "compfair/image_io.hpp"
#include "compfair/model_store.hpp"
#include "compfair/network.hpp"
#include "compfair/pipeline.hpp"
#include "compfair/pruning.hpp"
#include "compfair/quantization.hpp"
#include "compfair/rng.hpp"
#include "compfair/tensor.hpp"
#include "compfair/trainer.hpp"

#endif  // COMPFAIR_COMPFAIR_HPP_
