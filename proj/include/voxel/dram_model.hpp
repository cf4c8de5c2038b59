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
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"

namespace voxel {

enum class MemOp : std::uint8_t { Read = 0, Write = 1 };

/// One DRAM burst access on a channel.
struct MemoryRequest {
    Addr addr = 0;          // byte address within the channel
    MemOp op = MemOp::Read;
    Cycles arrival = 0;
    EventId event = 0;

    bool operator==(const MemoryRequest&) const = default;
};

/// Static per-channel parameters (shared by all channels of a chip).
struct ChannelParams {
    DramTiming timing;
    Cycles burst_beats = 1;       // data-bus beats per request
    std::uint32_t num_banks = 1;  // power of two
    Bytes row_bytes = 1024;       // power of two
    Bytes interface = 128;        // request alignment

    std::uint32_t bank_of(Addr a) const {
        return static_cast<std::uint32_t>((a / row_bytes) & (num_banks - 1));
    }
    std::uint64_t row_of(Addr a) const { return (a / row_bytes) >> log2_exact(num_banks); }
};

ChannelParams channel_params_from(const ChipSpec& spec, const DerivedGeometry& geom);

/// Open row and timing horizon of one bank.
struct BankState {
    static constexpr std::uint64_t kNoRow = ~0ull;
    std::uint64_t open_row = kNoRow;
    Cycles act_time = 0;   // activation time of the open row
    Cycles data_end = 0;   // end of the last data burst touching this bank
};

struct ServeOutcome {
    Cycles departure = 0;
    bool row_hit = false;
    bool row_conflict = false;
    Cycles conflict_stall = 0;  // extra command latency versus a row hit
};

/// Shift- and XOR-invariant snapshot of the automaton, anchored at the
/// (arrival, address) of the request just served. Two channels whose
/// fingerprints match behave identically on any continuation with matching
/// match-key lists.
struct ChannelFingerprint {
    struct BankFp {
        bool open = false;
        std::uint64_t row_rel = 0;
        std::int64_t act_delta = 0;
        std::int64_t data_delta = 0;
        bool operator==(const BankFp&) const = default;
    };
    std::vector<BankFp> banks;  // ordered by bank_index XOR bank(anchor)
    std::int64_t bus_free_delta = 0;
    std::int64_t last_cas_delta = 0;
    std::int64_t last_data_delta = 0;
    std::int8_t last_op = -1;
    bool operator==(const ChannelFingerprint&) const = default;
};

/// In-order (no FR-FCFS) open-page channel automaton. Requests must be fed in
/// (arrival, event id) order; a row hit costs tCL plus the burst, a conflict
/// pays tRP+tRCD with the precharge deferred until tRAS after activation.
class ChannelSim {
public:
    explicit ChannelSim(const ChannelParams& params);

    ServeOutcome serve(const MemoryRequest& r);
    void reset();

    ChannelFingerprint fingerprint(Cycles anchor_time, Addr anchor_addr) const;
    /// Rebuilds the exact automaton state a fingerprint captured, re-anchored
    /// at the current trace's (arrival, address).
    void restore(const ChannelFingerprint& fp, Cycles anchor_time, Addr anchor_addr);

    const ChannelParams& params() const { return params_; }
    Cycles busy_cycles() const { return busy_cycles_; }

private:
    ChannelParams params_;
    std::vector<BankState> banks_;
    Cycles bus_free_ = 0;
    Cycles last_cas_ = 0;
    Cycles last_data_end_ = 0;
    std::int8_t last_op_ = -1;
    Cycles busy_cycles_ = 0;
};

struct ChannelResult {
    static constexpr std::uint8_t kHit = 1;
    static constexpr std::uint8_t kConflict = 2;

    std::vector<Cycles> departures;
    std::vector<std::uint8_t> flags;  // kHit / kConflict per request
    Cycles row_conflict_stall = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t hits = 0;
};

/// Reference automaton: serves a whole trace in order from the given state.
ChannelResult simulate_channel(std::span<const MemoryRequest> trace, ChannelSim& state);
ChannelResult simulate_channel(std::span<const MemoryRequest> trace, const ChannelParams& params);

// ---------------------------------------------------------------------------
// Match-key coalescing
// ---------------------------------------------------------------------------

/// Key between consecutive requests: address XOR (which encodes every bank
/// and row transition), the op-type pair, and the inter-arrival gap.
struct MatchKey {
    Addr addr_xor = 0;
    std::uint8_t op_pair = 0;  // prev op << 1 | cur op
    std::uint64_t arrival_delta = 0;
    bool operator==(const MatchKey&) const = default;
};

std::vector<MatchKey> match_keys(std::span<const MemoryRequest> trace);

/// 128-bit identity of (first op, match-key list).
struct TraceDigest {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
};

TraceDigest trace_digest(std::span<const MemoryRequest> trace);

/// Channel trace that maintains its match-key digest as requests append,
/// the way the engine produces traces from movedata decomposition. Saves the
/// replay path a full identity re-scan.
class HashedTrace {
public:
    void push(Addr addr, MemOp op, Cycles arrival, EventId event);
    const std::vector<MemoryRequest>& requests() const { return requests_; }
    TraceDigest digest() const;
    std::size_t size() const { return requests_.size(); }

private:
    std::vector<MemoryRequest> requests_;
    std::uint64_t lanes_a_[4] = {1469598103934665603ull, 14029467366897019727ull,
                                 12393656017385166993ull, 17586613924467343537ull};
    std::uint64_t lanes_b_[4] = {0x2545f4914f6cdd1dull, 0x9e6c63d0876a9a75ull,
                                 0xb5297a4d3a2646cbull, 0x68e31da4a32535dbull};
};

struct CoalesceStats {
    std::uint64_t total_requests = 0;
    std::uint64_t replayed_requests = 0;   // served from cached deltas
    std::uint64_t simulated_requests = 0;  // tagged divergence windows
    std::uint64_t warmup_requests = 0;     // block warm-up, not counted as tagged
    std::uint64_t full_trace_hits = 0;

    double hit_rate() const {
        return total_requests == 0
                   ? 1.0
                   : static_cast<double>(replayed_requests) / static_cast<double>(total_requests);
    }
};

/// Cached per-channel-congruence-class timing. Channels with identical
/// placement patterns share entries. Lookup is thread-safe; insertions within
/// one simulation are single-threaded and hence deterministic.
class CoalescingCache {
public:
    struct TraceRef {
        std::uint8_t op0 = 0;
        std::vector<MatchKey> keys;
        std::vector<Cycles> latencies;        // departure - arrival
        std::vector<std::uint32_t> stalls;    // per-request conflict penalty
        std::vector<std::uint8_t> flags;      // ChannelResult flag bits
        std::vector<ChannelFingerprint> fps;  // after serving request i
        std::size_t fps_period = 0;           // steady-state period (fps truncated)
        // 128-bit identity of (op0, key list): collision odds are negligible
        // against the full-list compare the windowed path still performs.
        std::uint64_t key_hash = 0;
        std::uint64_t key_hash2 = 0;
        // Whole-result cache for byte-identical traces (same absolute
        // arrivals): cross-channel reuse needs only a copy.
        Cycles arrival0 = 0;
        std::vector<Cycles> departures_abs;
        Cycles total_stall = 0;
        std::uint64_t total_conflicts = 0;
        std::uint64_t total_hits = 0;

        const ChannelFingerprint& fp_at(std::size_t i) const {
            if (fps_period == 0 || i < fps.size()) return fps[i];
            const std::size_t base = fps.size() - fps_period;
            return fps[base + (i - base) % fps_period];
        }
    };

    const TraceRef* primary(std::uint64_t class_key) const;
    const TraceRef* by_hash(std::uint64_t class_key, std::uint64_t key_hash,
                            std::uint64_t key_hash2, std::size_t n) const;
    void insert(std::uint64_t class_key, TraceRef ref);
    std::size_t ref_count(std::uint64_t class_key) const;

private:
    mutable std::mutex mu_;
    std::map<std::uint64_t, std::vector<TraceRef>> classes_;
};

/// Equals simulate_channel output request-for-request, exactly. Repetitive
/// traces replay cached timing; divergent requests and a window of N before
/// and after (N = queue depth) are re-simulated with an N-request warm-up.
ChannelResult coalesced_simulate(std::span<const MemoryRequest> trace, const ChannelParams& params,
                                 CoalescingCache& cache, std::uint64_t class_key,
                                 std::uint32_t queue_depth, CoalesceStats* stats = nullptr);

/// Aggregate timing of one channel trace: what the engine consumes per
/// data-movement event.
struct ChannelTiming {
    Cycles last_departure = 0;
    Cycles row_conflict_stall = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t hits = 0;
    std::uint64_t requests = 0;
};

ChannelTiming simulate_channel_timing(std::span<const MemoryRequest> trace,
                                      const ChannelParams& params);

/// Cached-replay counterpart of simulate_channel_timing: a full-trace cache
/// hit needs only the identity scan, not a re-simulation.
ChannelTiming coalesced_timing(std::span<const MemoryRequest> trace, const ChannelParams& params,
                               CoalescingCache& cache, std::uint64_t class_key,
                               std::uint32_t queue_depth, CoalesceStats* stats = nullptr);

/// With a construction-time digest the full-trace cache hit is O(1).
ChannelTiming coalesced_timing(const HashedTrace& trace, const ChannelParams& params,
                               CoalescingCache& cache, std::uint64_t class_key,
                               std::uint32_t queue_depth, CoalesceStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Refresh
// ---------------------------------------------------------------------------

/// Rotating per-bank refresh windows: refresh r occupies
/// [r*interval, r*interval + duration) on bank r mod num_banks.
struct RefreshSchedule {
    Cycles interval = 0;  // tREFI in cycles; 0 disables refresh
    Cycles duration = 0;  // tRFC in cycles

    static RefreshSchedule from_spec(const ChipSpec& spec);
};

/// Shifts the arrival time of a request that targets an address whose bank is
/// under refresh during [arrival, arrival + service estimate).
Cycles apply_refresh(const MemoryRequest& r, const RefreshSchedule& schedule,
                     const ChannelParams& params);

// ---------------------------------------------------------------------------
// Core-group request tracker
// ---------------------------------------------------------------------------

/// Synchronizes the DRAM request streams of the cores in one group: no core
/// dispatches its request i+1 before every member has dispatched request i.
/// Stalled requests release in (index, core id) order.
class GroupTracker {
public:
    explicit GroupTracker(std::vector<CoreId> members);

    struct Admit {
        bool dispatched = false;
    };

    /// Core `core` asks to dispatch its request with 0-based `index`; the
    /// core's own previous requests must have been dispatched already.
    Admit admit(CoreId core, std::uint64_t index);

    /// Requests released by the most recent dispatch, in (index, core) order.
    std::vector<std::pair<std::uint64_t, CoreId>> take_released();

    std::uint64_t dispatched(CoreId core) const;
    /// Max - min dispatched count over members; the tracker keeps this <= 1.
    std::uint64_t spread() const;
    bool is_member(CoreId core) const;

private:
    bool can_dispatch(std::uint64_t index) const;
    void do_dispatch(CoreId core);

    std::vector<CoreId> members_;
    std::map<CoreId, std::uint64_t> count_;
    std::vector<std::pair<std::uint64_t, CoreId>> stalled_;
    std::vector<std::pair<std::uint64_t, CoreId>> released_;
};

std::uint64_t hash_bytes(const void* data, std::size_t len, std::uint64_t seed = 0);

}  // namespace voxel
