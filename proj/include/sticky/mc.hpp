#pragma once

// Exact simulation of the continuous-time jump chain of a discrete instance
// and batch-means time averages along one trajectory.

#include "sticky/discretize.hpp"
#include "sticky/error.hpp"
#include "sticky/rng.hpp"

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace sticky {

inline constexpr int kBatches = 32;

struct BatchStats {
    double interior_time = 0.0;
    double boundary_time = 0.0;
    double total_time = 0.0; ///< interior_time + boundary_time
    double elapsed = 0.0;    ///< the same time summed in jump order
    double weighted = 0.0;   ///< integral of f over the batch, in jump order
};

struct TrajectoryStats {
    double total_time = 0.0;
    double interior_time = 0.0;
    double boundary_time = 0.0;
    long jump_count = 0;
    double occupation_fraction = 0.0;
    double standard_error = 0.0;
    std::vector<BatchStats> batches;
};

struct ErgodicAverage {
    double value = 0.0;
    double standard_error = 0.0;
};

/// sum_i m_i q_i, the stationary jump rate.
inline double stationary_jump_rate(const Generator& gen) {
    double out = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) out += gen.m[i] * gen.total_rate[i];
    return out;
}

/// Horizon with the given expected number of jumps at stationarity.
inline double horizon_for_jumps(const Generator& gen, double jumps) { return jumps / stationary_jump_rate(gen); }

namespace detail {

inline double batch_mean_se(const std::vector<double>& means) {
    const double k = static_cast<double>(means.size());
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= k;
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    return std::sqrt(var / (k - 1.0) / k);
}

/// One trajectory cut into kBatches equal time slices, each driven by its own
/// stream derived from (seed, batch) and started where the previous one ended.
inline TrajectoryStats run_chain(const Generator& gen, std::size_t start, double horizon, std::uint64_t seed,
                                 std::span<const double> f) {
    require(horizon > 0, ErrorCode::InvalidArgument, "horizon must be > 0");
    require(start < gen.size(), ErrorCode::InvalidArgument, "start node out of range");
    for (std::size_t i = 0; i < gen.size(); ++i)
        require(gen.total_rate[i] > 0, ErrorCode::AbsorbingState,
                "node " + std::to_string(i) + " has zero total rate");
    TrajectoryStats out;
    const double slice = horizon / kBatches;
    std::size_t state = start;
    double carry = 0.0; // remaining holding time carried across a batch edge
    for (int b = 0; b < kBatches; ++b) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(b)}));
        BatchStats bs;
        double left = slice;
        bool fresh = b == 0;
        while (left > 0) {
            double hold = carry;
            if (fresh || hold <= 0) hold = rng.exponential(gen.total_rate[state]);
            fresh = false;
            const double dt = std::min(hold, left);
            (gen.boundary_mask[state] ? bs.boundary_time : bs.interior_time) += dt;
            bs.elapsed += dt;
            bs.weighted += f.empty() ? 0.0 : f[state] * dt;
            left -= dt;
            if (hold > dt) {
                carry = hold - dt;
                break;
            }
            carry = 0.0;
            double u = rng.uniform() * gen.total_rate[state];
            std::size_t next = gen.target[gen.row_start[state + 1] - 1];
            for (std::size_t k = gen.row_start[state]; k < gen.row_start[state + 1]; ++k) {
                if (u < gen.rate[k]) {
                    next = gen.target[k];
                    break;
                }
                u -= gen.rate[k];
            }
            state = next;
            ++out.jump_count;
        }
        bs.total_time = bs.interior_time + bs.boundary_time;
        out.batches.push_back(bs);
    }
    std::vector<double> fractions;
    for (const auto& bs : out.batches) {
        out.interior_time += bs.interior_time;
        out.boundary_time += bs.boundary_time;
        fractions.push_back(bs.interior_time / bs.total_time);
    }
    out.total_time = out.interior_time + out.boundary_time;
    out.occupation_fraction = out.interior_time / out.total_time;
    out.standard_error = batch_mean_se(fractions);
    return out;
}

} // namespace detail

/// Simulates the chain from `start` for `horizon` time units.
inline TrajectoryStats simulate(const Generator& gen, std::size_t start, double horizon, std::uint64_t seed) {
    return detail::run_chain(gen, start, horizon, seed, {});
}

/// Time average of f along one trajectory.
inline ErgodicAverage ergodic_average(const Generator& gen, std::span<const double> f, double horizon,
                                      std::uint64_t seed, std::size_t start = 0) {
    require(f.size() == gen.size(), ErrorCode::InvalidArgument, "f must have one value per node");
    const auto stats = detail::run_chain(gen, start, horizon, seed, f);
    ErgodicAverage out;
    double weighted = 0.0, elapsed = 0.0;
    std::vector<double> means;
    for (const auto& bs : stats.batches) {
        weighted += bs.weighted;
        elapsed += bs.elapsed;
        means.push_back(bs.weighted / bs.elapsed);
    }
    out.value = weighted / elapsed;
    out.standard_error = detail::batch_mean_se(means);
    return out;
}

inline void write_batches_csv(std::ostream& os, const TrajectoryStats& stats) {
    os << "batch,interior_time,total_time\n";
    os.precision(17);
    for (std::size_t b = 0; b < stats.batches.size(); ++b)
        os << b << "," << stats.batches[b].interior_time << "," << stats.batches[b].total_time << "\n";
}

} // namespace sticky
