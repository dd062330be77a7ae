// Copyright 2026 The auroraclr Authors.
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

#pragma once

/// \file auroraclr.hpp
/// Umbrella header.

#include "auroraclr/augment.hpp"
#include "auroraclr/binary_io.hpp"
#include "auroraclr/clustering.hpp"
#include "auroraclr/config.hpp"
#include "auroraclr/data.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/evaluation.hpp"
#include "auroraclr/gradcheck.hpp"
#include "auroraclr/image_io.hpp"
#include "auroraclr/loss.hpp"
#include "auroraclr/matrix.hpp"
#include "auroraclr/model.hpp"
#include "auroraclr/ops.hpp"
#include "auroraclr/pipeline.hpp"
#include "auroraclr/rng.hpp"
#include "auroraclr/tensor.hpp"
#include "auroraclr/trainer.hpp"
