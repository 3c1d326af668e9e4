// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "einslots/backend.hpp"
#include "einslots/engine.hpp"
#include "einslots/equation.hpp"
#include "einslots/errors.hpp"
#include "einslots/linear_transform.hpp"
#include "einslots/oracle.hpp"
#include "einslots/packing.hpp"
#include "einslots/rotate_sum.hpp"
#include "einslots/tensor.hpp"
