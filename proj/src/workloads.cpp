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

#include "voxel/workloads.hpp"

#include <filesystem>

#include "voxel/dram_model.hpp"

namespace voxel {

Phase phase_from_name(const std::string& name) {
    if (name == "prefill") return Phase::Prefill;
    if (name == "decode") return Phase::Decode;
    throw ConfigError("unknown phase '" + name + "' (prefill|decode)");
}

const char* phase_name(Phase p) { return p == Phase::Prefill ? "prefill" : "decode"; }

std::uint64_t OperatorDesc::shape_hash() const {
    std::uint64_t h = hash_bytes(&kind, sizeof(kind));
    auto mix = [&](std::uint64_t v) { h = hash_bytes(&v, sizeof(v), h); };
    mix(m);
    mix(k);
    mix(n);
    mix(elems);
    mix(rows);
    mix(cols);
    mix(fused_inputs);
    mix(static_cast<std::uint64_t>(dtype));
    for (const Operand& in : inputs) {
        mix(in.bytes);
        mix(in.persistent ? 1 : 0);
    }
    mix(output.bytes);
    return h;
}

Bytes OperatorDesc::weight_bytes() const {
    Bytes b = 0;
    for (const Operand& in : inputs) {
        if (in.persistent) b += in.bytes;
    }
    return b;
}

namespace {

struct Expander {
    const ModelSpec& model;
    const PhaseSpec& phase;
    std::vector<OperatorDesc> ops;
    Bytes ds;

    std::uint64_t rows_m() const {
        // Token rows entering every projection.
        return phase.phase == Phase::Prefill
                   ? static_cast<std::uint64_t>(phase.batch) * phase.seq_len
                   : static_cast<std::uint64_t>(phase.batch);
    }
    std::uint64_t attn_len() const {
        return phase.phase == Phase::Prefill ? phase.seq_len : phase.kv_len;
    }

    std::uint32_t matmul(std::uint32_t layer, const std::string& name, std::uint64_t m,
                         std::uint64_t k, std::uint64_t n, Operand a, Operand b,
                         const std::string& out_name, std::int32_t group = -1) {
        OperatorDesc op;
        op.name = name;
        op.kind = OpKind::MatMul;
        op.m = m;
        op.k = k;
        op.n = n;
        op.layer = layer;
        op.group = group;
        op.dtype = model.dtype;
        op.inputs = {std::move(a), std::move(b)};
        op.output = Operand{out_name, m * n * ds, false};
        ops.push_back(std::move(op));
        return static_cast<std::uint32_t>(ops.size() - 1);
    }

    std::uint32_t elementwise(std::uint32_t layer, const std::string& name, std::uint64_t elems,
                              std::vector<Operand> ins, const std::string& out_name) {
        OperatorDesc op;
        op.name = name;
        op.kind = OpKind::Elementwise;
        op.elems = elems;
        op.fused_inputs = static_cast<std::uint32_t>(ins.size());
        op.layer = layer;
        op.dtype = model.dtype;
        op.inputs = std::move(ins);
        op.output = Operand{out_name, elems * ds, false};
        ops.push_back(std::move(op));
        return static_cast<std::uint32_t>(ops.size() - 1);
    }

    Operand weight(const std::string& name, std::uint64_t elems) const {
        return Operand{name, elems * ds, true};
    }
    Operand act(const std::string& name, std::uint64_t elems) const {
        return Operand{name, elems * ds, false};
    }

    void layer_ops(std::uint32_t l) {
        const std::uint64_t h = model.hidden_dim;
        const std::uint64_t d = model.head_dim();
        const std::uint64_t kvd = static_cast<std::uint64_t>(model.kv_heads) * d;
        const std::uint64_t f = model.ffn_dim;
        const std::uint64_t M = rows_m();
        const std::uint64_t L = attn_len();
        const std::string p = "L" + std::to_string(l) + ".";
        const std::string x_in = l == 0 ? "x0" : ("L" + std::to_string(l - 1) + ".out");
        // Layer 0 reads the pre-placed input activations.
        const Operand xres = Operand{x_in, M * h * ds, l == 0};

        elementwise(l, p + "norm1", M * h, {xres, weight(p + "norm1.w", h)}, p + "xn1");
        const Operand xn1 = act(p + "xn1", M * h);

        matmul(l, p + "q_proj", M, h, h, xn1, weight(p + "w_q", h * h), p + "q");
        const auto kp = matmul(l, p + "k_proj", M, h, kvd, xn1, weight(p + "w_k", h * kvd), p + "kapp");
        const auto vp = matmul(l, p + "v_proj", M, h, kvd, xn1, weight(p + "w_v", h * kvd), p + "vapp");

        // Attention per head: batch rows are packed into M; the KV operand is
        // the whole per-head cache (or the fresh K/V in cache-less serving).
        const std::uint64_t mrows =
            phase.phase == Phase::Prefill ? static_cast<std::uint64_t>(phase.batch) * phase.seq_len
                                          : static_cast<std::uint64_t>(phase.batch);
        const std::uint64_t kv_elems = static_cast<std::uint64_t>(phase.batch) * L * d;
        const bool cached = model.has_kv_cache && phase.phase == Phase::Decode;
        for (std::uint32_t head = 0; head < model.num_heads; ++head) {
            const std::string hp = p + "h" + std::to_string(head) + ".";
            Operand kop = cached ? weight(hp + "kcache", kv_elems) : act(hp + "kpart", kv_elems);
            Operand vop = cached ? weight(hp + "vcache", kv_elems) : act(hp + "vpart", kv_elems);
            kop.persistent = cached;
            vop.persistent = cached;
            const auto score = matmul(l, hp + "score", mrows, d, L,
                                      act(p + "q", mrows * d), kop, hp + "s",
                                      static_cast<std::int32_t>(head));
            ops[score].after.push_back(kp);

            OperatorDesc sm;
            sm.name = hp + "softmax";
            sm.kind = OpKind::Softmax;
            sm.rows = mrows;
            sm.cols = L;
            sm.layer = l;
            sm.group = static_cast<std::int32_t>(head);
            sm.dtype = model.dtype;
            sm.inputs = {act(hp + "s", mrows * L)};
            sm.output = Operand{hp + "prob", mrows * L * ds, false};
            ops.push_back(std::move(sm));
            const auto smi = static_cast<std::uint32_t>(ops.size() - 1);

            // Each head writes its slice of the concatenated context.
            const auto ctx = matmul(l, hp + "context", mrows, L, d,
                                    act(hp + "prob", mrows * L), vop, p + "ctx_all",
                                    static_cast<std::int32_t>(head));
            ops[ctx].after.push_back(vp);
            ops[ctx].after.push_back(smi);
        }

        matmul(l, p + "o_proj", M, h, h, act(p + "ctx_all", M * h), weight(p + "w_o", h * h),
               p + "att");
        elementwise(l, p + "res1", M * h, {act(p + "att", M * h), xres}, p + "r1");
        elementwise(l, p + "norm2", M * h, {act(p + "r1", M * h), weight(p + "norm2.w", h)},
                    p + "xn2");
        const Operand xn2 = act(p + "xn2", M * h);

        if (model.gated_ffn) {
            matmul(l, p + "ffn_gate", M, h, f, xn2, weight(p + "w_gate", h * f), p + "g");
            matmul(l, p + "ffn_up", M, h, f, xn2, weight(p + "w_up", h * f), p + "u");
            elementwise(l, p + "ffn_act", M * f, {act(p + "g", M * f), act(p + "u", M * f)},
                        p + "a");
            matmul(l, p + "ffn_down", M, f, h, act(p + "a", M * f), weight(p + "w_down", f * h),
                   p + "dn");
        } else {
            matmul(l, p + "ffn_up", M, h, f, xn2, weight(p + "w_up", h * f), p + "u");
            elementwise(l, p + "ffn_act", M * f, {act(p + "u", M * f)}, p + "a");
            matmul(l, p + "ffn_down", M, f, h, act(p + "a", M * f), weight(p + "w_down", f * h),
                   p + "dn");
        }
        elementwise(l, p + "res2", M * h, {act(p + "dn", M * h), act(p + "r1", M * h)}, p + "out");
    }
};

}  // namespace

std::vector<OperatorDesc> expand(const ModelSpec& model, const PhaseSpec& phase) {
    if (model.num_layers == 0 || model.hidden_dim == 0 || model.num_heads == 0)
        throw ValidationError("model dims must be positive");
    if (model.hidden_dim % model.num_heads != 0)
        throw ValidationError("hidden_dim must be divisible by num_heads");
    if (phase.batch < 1 || (phase.phase == Phase::Prefill ? phase.seq_len : phase.kv_len) < 1)
        throw ValidationError("batch and sequence lengths must be >= 1");

    Expander ex{model, phase, {}, dtype_size(model.dtype)};
    for (std::uint32_t l = 0; l < model.num_layers; ++l) ex.layer_ops(l);
    return std::move(ex.ops);
}

ModelSpec load_model(const ConfigDoc& doc) {
    ModelSpec m;
    for (const auto& [key, value] : doc.entries()) {
        if (key == "name") m.name = value;
        else if (key == "num_layers") m.num_layers = static_cast<std::uint32_t>(parse_count(value, key));
        else if (key == "hidden_dim") m.hidden_dim = parse_count(value, key);
        else if (key == "num_heads") m.num_heads = static_cast<std::uint32_t>(parse_count(value, key));
        else if (key == "kv_heads") m.kv_heads = static_cast<std::uint32_t>(parse_count(value, key));
        else if (key == "ffn_dim") m.ffn_dim = parse_count(value, key);
        else if (key == "vocab_size") m.vocab_size = parse_count(value, key);
        else if (key == "dtype") m.dtype = dtype_from_name(value);
        else if (key == "gated_ffn") m.gated_ffn = parse_bool(value, key);
        else if (key == "kv_cache") m.has_kv_cache = parse_bool(value, key);
        else throw ConfigError("unknown model key '" + key + "'");
    }
    if (m.kv_heads == 0) m.kv_heads = m.num_heads;
    if (m.num_layers == 0 || m.hidden_dim == 0 || m.num_heads == 0 || m.ffn_dim == 0)
        throw ValidationError("model file missing required dims (num_layers, hidden_dim, num_heads, ffn_dim)");
    if (m.hidden_dim % m.num_heads != 0)
        throw ValidationError("hidden_dim must be divisible by num_heads");
    return m;
}

ModelSpec load_model_file(const std::string& path) {
    ModelSpec m = load_model(ConfigDoc::load_file(path));
    if (m.name.empty()) m.name = std::filesystem::path(path).stem().string();
    return m;
}

ModelSpec resolve_model(const std::string& name_or_path, const std::string& data_dir) {
    namespace fs = std::filesystem;
    if (fs::exists(name_or_path)) return load_model_file(name_or_path);
    const fs::path candidate = fs::path(data_dir) / "models" / (name_or_path + ".model");
    if (fs::exists(candidate)) return load_model_file(candidate.string());
    throw ConfigError("model '" + name_or_path + "' not found (looked for " + candidate.string() +
                      ")");
}

std::string render_model(const ModelSpec& m) {
    std::string out;
    out += "name: " + m.name + "\n";
    out += "num_layers: " + std::to_string(m.num_layers) + "\n";
    out += "hidden_dim: " + std::to_string(m.hidden_dim) + "\n";
    out += "num_heads: " + std::to_string(m.num_heads) + "\n";
    out += "kv_heads: " + std::to_string(m.kv_heads) + "\n";
    out += "ffn_dim: " + std::to_string(m.ffn_dim) + "\n";
    out += "vocab_size: " + std::to_string(m.vocab_size) + "\n";
    out += "dtype: " + std::string(dtype_name(m.dtype)) + "\n";
    out += "gated_ffn: " + std::string(m.gated_ffn ? "true" : "false") + "\n";
    out += "kv_cache: " + std::string(m.has_kv_cache ? "true" : "false") + "\n";
    return out;
}

}  // namespace voxel
