#pragma once

#include "dch/event_log.hpp"
#include "dch/excitation.hpp"
#include "dch/membership.hpp"
#include "dch/params.hpp"

#include <cstdint>

namespace dch {

struct SimConfig {
    std::uint64_t seed = 1;
    int replicates = 1;
    bool allow_self_edges = false;
    double burn_in = 0.0;  // simulate over [-burn_in, T], keep [0, T]
    double sigma_star = kDefaultSigmaStar;

    void validate() const {
        if (replicates < 1) throw std::invalid_argument("SimConfig: replicates must be >= 1");
        if (burn_in < 0.0) throw std::invalid_argument("SimConfig: burn_in must be >= 0");
    }
};

// Exact samplers via Ogata thinning with exponential kernels; the decaying
// excitation state is carried recursively so per-event cost is O(1)
// amortized per affected dimension. Identical seed + config gives a
// bit-identical EventLog regardless of execution order.
EventLog simulate_sr(const SRParams& params, const Membership& z, double T, const SimConfig& cfg);
EventLog simulate_chip(const SRParams& params, const Membership& z, double T,
                       const SimConfig& cfg);
EventLog simulate_bhm(const SRParams& params, const Membership& z, double T, const SimConfig& cfg);
EventLog simulate_mulch(const MULCHParams& params, const Membership& z, double T,
                        const SimConfig& cfg);

EventLog simulate(ModelFamily family, const SRParams& params, const Membership& z, double T,
                  const SimConfig& cfg);

} // namespace dch
