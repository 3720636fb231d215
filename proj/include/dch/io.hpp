#pragma once

#include "dch/event_log.hpp"
#include "dch/membership.hpp"
#include "dch/params.hpp"
#include "dch/spectral.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dch {

struct DatasetSpec {
    std::string path;
    int sender_col = 0;
    int receiver_col = 1;
    int time_col = 2;
    bool scale_to_1000 = false;       // affine rescale of timestamps onto [0, 1000]
    std::optional<int> test_event_count;
    std::optional<double> test_fraction;
    bool drop_self_edges = true;
};

struct IngestResult {
    EventLog train;
    EventLog test;                    // same n, window follows the train window
    std::vector<std::string> node_ids;  // dense index -> original token
    int dropped_self_edges = 0;
};

// Reads a sender,receiver,timestamp CSV (header auto-detected, extra columns
// allowed via the column mapping), sorts by time, maps node tokens to dense
// indices, optionally rescales timestamps, and splits the final events into
// the test set. Malformed rows raise with line numbers.
IngestResult ingest(const DatasetSpec& spec);

void write_events_csv(const EventLog& log, const std::string& path, bool header = false);
EventLog read_events_csv(const std::string& path, int n_hint = 0);

// Count-matrix exports: dense CSV (one row per node) or a coordinate list of
// the nonzero entries as `i,j,count` lines.
void write_count_matrix_dense(const CountMatrix& N, const std::string& path);
void write_count_matrix_coo(const CountMatrix& N, const std::string& path);

// Plain-text key-value parameter files. Grammar: one `key = value...` per
// line, `#` comments; keys `model`, `variant` (SR only), `K`, `T` optional,
// and one key per K*K matrix in row-major order:
//   sr/chip/bhm: M alpha_n alpha_r beta_n beta_r
//   mulch:       mu alpha_{n,r,tc,ac,gr,ar} beta_{n,r,tc,ac,gr,ar}
struct ParamFile {
    ModelFamily family = ModelFamily::sr;
    std::variant<SRParams, MULCHParams> params;

    const SRParams& sr() const { return std::get<SRParams>(params); }
    const MULCHParams& mulch() const { return std::get<MULCHParams>(params); }
};

ParamFile read_params(const std::string& path);
void write_params(const ParamFile& pf, const std::string& path,
                  const std::vector<std::string>& provenance = {});

void write_membership(const Membership& z, const std::string& path);
Membership read_membership(const std::string& path);

} // namespace dch
