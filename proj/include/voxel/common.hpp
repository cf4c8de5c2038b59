/*
 * Copyright 2026 The Voxel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace voxel {

using Cycles = std::uint64_t;
using Addr = std::uint64_t;
using Bytes = std::uint64_t;
using CoreId = std::uint32_t;
using ChannelId = std::uint32_t;
using EventId = std::uint32_t;
using TensorId = std::uint32_t;

inline constexpr EventId kNoEvent = std::numeric_limits<EventId>::max();
inline constexpr TensorId kNoTensor = std::numeric_limits<TensorId>::max();

/// Configuration file / flag errors (carry line or key context in the message).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A spec or plan invariant was violated; the message names the invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Errors raised while planning an execution (tiling, placement, collectives).
class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Errors raised by the simulation engine (deadlock, inconsistent state).
class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { BF16, FP16, FP32, INT8 };

inline Bytes dtype_size(DType t) {
    switch (t) {
        case DType::BF16: return 2;
        case DType::FP16: return 2;
        case DType::FP32: return 4;
        case DType::INT8: return 1;
    }
    return 2;
}

inline const char* dtype_name(DType t) {
    switch (t) {
        case DType::BF16: return "bf16";
        case DType::FP16: return "fp16";
        case DType::FP32: return "fp32";
        case DType::INT8: return "int8";
    }
    return "bf16";
}

DType dtype_from_name(const std::string& name);

inline bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

/// Log2 of a power of two.
inline std::uint32_t log2_exact(std::uint64_t v) {
    std::uint32_t n = 0;
    while (v > 1) {
        v >>= 1;
        ++n;
    }
    return n;
}

}  // namespace voxel
