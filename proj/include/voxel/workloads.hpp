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
#include <string>
#include <vector>

#include "voxel/common.hpp"
#include "voxel/graph.hpp"

namespace voxel {

struct ModelSpec {
    std::string name;
    std::uint32_t num_layers = 0;
    std::uint64_t hidden_dim = 0;
    std::uint32_t num_heads = 0;
    std::uint32_t kv_heads = 0;  // < num_heads under GQA
    std::uint64_t ffn_dim = 0;
    std::uint64_t vocab_size = 0;
    DType dtype = DType::BF16;
    bool gated_ffn = true;    // three FFN matmuls (gate/up/down) vs two
    bool has_kv_cache = true; // false for single-phase serving (vision models)

    std::uint64_t head_dim() const { return hidden_dim / num_heads; }
};

enum class Phase : std::uint8_t { Prefill, Decode };

Phase phase_from_name(const std::string& name);
const char* phase_name(Phase p);

struct PhaseSpec {
    Phase phase = Phase::Decode;
    std::uint32_t batch = 32;
    std::uint64_t seq_len = 2048;  // prompt length (prefill)
    std::uint64_t kv_len = 2048;   // cache length (decode)
};

/// A named data operand of an operator. Persistent operands (weights, KV
/// cache) live in DRAM before the run starts; others are produced by an
/// earlier operator.
struct Operand {
    std::string name;
    Bytes bytes = 0;
    bool persistent = false;
};

/// One full-size tensor operator before partitioning.
struct OperatorDesc {
    std::string name;
    OpKind kind = OpKind::MatMul;
    std::uint64_t m = 0, k = 0, n = 0;   // MatMul
    std::uint64_t elems = 0;             // Elementwise / Reduce
    std::uint64_t rows = 0, cols = 0;    // Softmax
    std::uint32_t fused_inputs = 1;
    std::vector<Operand> inputs;
    Operand output;
    std::uint32_t layer = 0;
    std::int32_t group = -1;             // attention head group; co-scheduled
    std::vector<std::uint32_t> after;    // extra ordering deps (op indices)
    DType dtype = DType::BF16;

    /// FNV hash of the shape-defining fields (names excluded).
    std::uint64_t shape_hash() const;
    /// Sum of persistent input bytes (the model weights this op streams).
    Bytes weight_bytes() const;
};

/// Expands a model and phase into the per-layer operator list: QKV
/// projections, per-head attention score/context MatMuls and softmax, output
/// projection, FFN MatMuls, and fused norm/residual elementwise ops.
std::vector<OperatorDesc> expand(const ModelSpec& model, const PhaseSpec& phase);

ModelSpec load_model(const ConfigDoc& doc);
ModelSpec load_model_file(const std::string& path);
/// Accepts either a file path or a model name found under `data_dir`.
ModelSpec resolve_model(const std::string& name_or_path, const std::string& data_dir);

std::string render_model(const ModelSpec& model);

}  // namespace voxel
