#include "dch/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dch {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    for (std::string& f : fields) {
        while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.erase(f.begin());
        while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.pop_back();
    }
    return fields;
}

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
    *out = v;
    return true;
}

struct RawEvent {
    std::string sender, receiver;
    double time;
};

} // namespace

IngestResult ingest(const DatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw std::runtime_error("ingest: cannot open " + spec.path);
    const int need = std::max({spec.sender_col, spec.receiver_col, spec.time_col}) + 1;

    std::vector<RawEvent> raw;
    std::vector<std::string> bad_lines;
    std::string line;
    int lineno = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        double t = 0.0;
        const bool ok = static_cast<int>(fields.size()) >= need &&
                        parse_double(fields[spec.time_col], &t) &&
                        !fields[spec.sender_col].empty() && !fields[spec.receiver_col].empty();
        if (!ok) {
            if (first_data_line) {
                first_data_line = false;  // header row
                continue;
            }
            bad_lines.push_back(std::to_string(lineno));
            continue;
        }
        first_data_line = false;
        if (!std::isfinite(t)) {
            bad_lines.push_back(std::to_string(lineno));
            continue;
        }
        raw.push_back({fields[spec.sender_col], fields[spec.receiver_col], t});
    }
    if (!bad_lines.empty()) {
        std::string msg = "ingest: malformed rows at lines ";
        for (std::size_t i = 0; i < bad_lines.size() && i < 10; ++i)
            msg += (i ? ", " : "") + bad_lines[i];
        if (bad_lines.size() > 10) msg += ", ...";
        throw std::runtime_error(msg);
    }
    if (raw.empty()) throw std::runtime_error("ingest: no events in " + spec.path);

    IngestResult out;
    if (spec.drop_self_edges) {
        std::vector<RawEvent> kept;
        kept.reserve(raw.size());
        for (auto& e : raw) {
            if (e.sender == e.receiver)
                ++out.dropped_self_edges;
            else
                kept.push_back(std::move(e));
        }
        raw = std::move(kept);
        if (raw.empty()) throw std::runtime_error("ingest: only self edges in " + spec.path);
    }

    std::stable_sort(raw.begin(), raw.end(), [](const RawEvent& a, const RawEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.sender != b.sender) return a.sender < b.sender;
        return a.receiver < b.receiver;
    });

    if (spec.scale_to_1000) {
        const double lo = raw.front().time, hi = raw.back().time;
        if (hi > lo)
            for (auto& e : raw) e.time = (e.time - lo) * 1000.0 / (hi - lo);
        else
            for (auto& e : raw) e.time = 0.0;
    }

    // keep already-dense integer ids; otherwise re-index by first appearance
    std::map<std::string, int> id_map;
    bool dense_numeric = true;
    long max_id = -1;
    for (const auto& e : raw) {
        for (const std::string* tok : {&e.sender, &e.receiver}) {
            long v = 0;
            auto [p, ec] = std::from_chars(tok->data(), tok->data() + tok->size(), v);
            if (ec != std::errc() || p != tok->data() + tok->size() || v < 0) {
                dense_numeric = false;
                break;
            }
            max_id = std::max(max_id, v);
        }
        if (!dense_numeric) break;
    }
    if (dense_numeric) {
        std::vector<char> seen(static_cast<std::size_t>(max_id) + 1, 0);
        long distinct = 0;
        for (const auto& e : raw)
            for (const std::string* tok : {&e.sender, &e.receiver}) {
                const long v = std::stol(*tok);
                if (!seen[v]) {
                    seen[v] = 1;
                    ++distinct;
                }
            }
        dense_numeric = distinct == max_id + 1;
    }
    auto lookup = [&](const std::string& tok) {
        if (dense_numeric) return static_cast<int>(std::stol(tok));
        auto it = id_map.find(tok);
        if (it == id_map.end()) it = id_map.emplace(tok, static_cast<int>(id_map.size())).first;
        return it->second;
    };

    std::vector<Event> events;
    events.reserve(raw.size());
    int n = 0;
    for (const auto& e : raw) {
        const int s = lookup(e.sender), r = lookup(e.receiver);
        n = std::max({n, s + 1, r + 1});
        events.push_back({s, r, e.time});
    }
    out.node_ids.resize(n);
    if (dense_numeric) {
        for (int i = 0; i < n; ++i) out.node_ids[i] = std::to_string(i);
    } else {
        for (const auto& [tok, idx] : id_map) out.node_ids[idx] = tok;
    }

    std::size_t test_count = 0;
    if (spec.test_event_count)
        test_count = static_cast<std::size_t>(std::max(0, *spec.test_event_count));
    else if (spec.test_fraction)
        test_count = static_cast<std::size_t>(std::lround(*spec.test_fraction * events.size()));
    if (test_count > events.size())
        throw std::runtime_error("ingest: test split larger than the dataset");

    // the last test_count events form the test set; the train window closes
    // at the first test event's timestamp
    const std::size_t split = events.size() - test_count;
    const double total_T = events.back().time;
    const double t_split = test_count > 0 ? events[split].time : total_T;

    out.train.n = n;
    out.train.horizon_T = t_split;
    out.train.events.assign(events.begin(), events.begin() + split);
    out.test.n = n;
    out.test.horizon_T = total_T;
    out.test.events.assign(events.begin() + split, events.end());
    return out;
}

void write_events_csv(const EventLog& log, const std::string& path, bool header) {
    std::ofstream outf(path);
    if (!outf) throw std::runtime_error("write_events_csv: cannot open " + path);
    if (header) outf << "sender,receiver,timestamp\n";
    char buf[64];
    for (const Event& e : log.events) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.time);
        outf << e.sender << ',' << e.receiver << ',' << buf << '\n';
    }
}

EventLog read_events_csv(const std::string& path, int n_hint) {
    DatasetSpec spec;
    spec.path = path;
    spec.drop_self_edges = false;
    IngestResult r = ingest(spec);
    EventLog log = std::move(r.train);
    if (n_hint > log.n) log.n = n_hint;
    return log;
}

void write_count_matrix_dense(const CountMatrix& N, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_count_matrix_dense: cannot open " + path);
    for (int i = 0; i < N.n; ++i) {
        for (int j = 0; j < N.n; ++j) out << (j ? "," : "") << N.at(i, j);
        out << '\n';
    }
}

void write_count_matrix_coo(const CountMatrix& N, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_count_matrix_coo: cannot open " + path);
    out << "i,j,count\n";
    for (int i = 0; i < N.n; ++i)
        for (int j = 0; j < N.n; ++j)
            if (N.at(i, j) != 0) out << i << ',' << j << ',' << N.at(i, j) << '\n';
}

namespace {

void write_matrix_line(std::ofstream& out, const std::string& key, const Matrix& m) {
    out << key << " =";
    char buf[64];
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            out << ' ' << buf;
        }
    out << '\n';
}

Matrix parse_matrix(const std::string& value, int K, const std::string& key) {
    std::istringstream iss(value);
    Matrix m(K, K);
    for (int r = 0; r < K; ++r)
        for (int c = 0; c < K; ++c)
            if (!(iss >> m(r, c)))
                throw std::runtime_error("params: matrix " + key + " needs " +
                                         std::to_string(K * K) + " values");
    double extra;
    if (iss >> extra) throw std::runtime_error("params: too many values for " + key);
    return m;
}

} // namespace

ParamFile read_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_params: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        };
        trim(key);
        trim(value);
        if (!key.empty()) kv[key] = value;
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("params: missing key " + key);
        return it->second;
    };

    ParamFile pf;
    pf.family = model_family_from_string(need("model"));
    const int K = std::stoi(need("K"));
    if (K < 1) throw std::runtime_error("params: K must be >= 1");

    if (pf.family == ModelFamily::mulch) {
        MULCHParams p;
        p.mu = parse_matrix(need("mu"), K, "mu");
        p.alpha_n = parse_matrix(need("alpha_n"), K, "alpha_n");
        p.alpha_r = parse_matrix(need("alpha_r"), K, "alpha_r");
        p.alpha_tc = parse_matrix(need("alpha_tc"), K, "alpha_tc");
        p.alpha_ac = parse_matrix(need("alpha_ac"), K, "alpha_ac");
        p.alpha_gr = parse_matrix(need("alpha_gr"), K, "alpha_gr");
        p.alpha_ar = parse_matrix(need("alpha_ar"), K, "alpha_ar");
        p.beta_n = parse_matrix(need("beta_n"), K, "beta_n");
        p.beta_r = parse_matrix(need("beta_r"), K, "beta_r");
        p.beta_tc = parse_matrix(need("beta_tc"), K, "beta_tc");
        p.beta_ac = parse_matrix(need("beta_ac"), K, "beta_ac");
        p.beta_gr = parse_matrix(need("beta_gr"), K, "beta_gr");
        p.beta_ar = parse_matrix(need("beta_ar"), K, "beta_ar");
        p.validate();
        pf.params = std::move(p);
    } else {
        SRParams p;
        p.M = parse_matrix(need("M"), K, "M");
        p.alpha_n = parse_matrix(need("alpha_n"), K, "alpha_n");
        p.alpha_r = parse_matrix(need("alpha_r"), K, "alpha_r");
        p.beta_n = parse_matrix(need("beta_n"), K, "beta_n");
        p.beta_r = parse_matrix(need("beta_r"), K, "beta_r");
        if (auto it = kv.find("variant"); it != kv.end())
            p.variant = sr_variant_from_string(it->second);
        p.validate();
        pf.params = std::move(p);
    }
    return pf;
}

void write_params(const ParamFile& pf, const std::string& path,
                  const std::vector<std::string>& provenance) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_params: cannot open " + path);
    for (const std::string& note : provenance) out << "# " << note << '\n';
    out << "model = " << to_string(pf.family) << '\n';
    if (pf.family == ModelFamily::mulch) {
        const MULCHParams& p = pf.mulch();
        out << "K = " << p.K() << '\n';
        write_matrix_line(out, "mu", p.mu);
        write_matrix_line(out, "alpha_n", p.alpha_n);
        write_matrix_line(out, "alpha_r", p.alpha_r);
        write_matrix_line(out, "alpha_tc", p.alpha_tc);
        write_matrix_line(out, "alpha_ac", p.alpha_ac);
        write_matrix_line(out, "alpha_gr", p.alpha_gr);
        write_matrix_line(out, "alpha_ar", p.alpha_ar);
        write_matrix_line(out, "beta_n", p.beta_n);
        write_matrix_line(out, "beta_r", p.beta_r);
        write_matrix_line(out, "beta_tc", p.beta_tc);
        write_matrix_line(out, "beta_ac", p.beta_ac);
        write_matrix_line(out, "beta_gr", p.beta_gr);
        write_matrix_line(out, "beta_ar", p.beta_ar);
    } else {
        const SRParams& p = pf.sr();
        out << "variant = " << to_string(p.variant) << '\n';
        out << "K = " << p.K() << '\n';
        write_matrix_line(out, "M", p.M);
        write_matrix_line(out, "alpha_n", p.alpha_n);
        write_matrix_line(out, "alpha_r", p.alpha_r);
        write_matrix_line(out, "beta_n", p.beta_n);
        write_matrix_line(out, "beta_r", p.beta_r);
    }
}

void write_membership(const Membership& z, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_membership: cannot open " + path);
    out << "K = " << z.K << '\n';
    for (int i = 0; i < z.n(); ++i) out << z.z[i] << '\n';
}

Membership read_membership(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_membership: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_membership: empty file");
    const auto eq = line.find('=');
    const int K = std::stoi(line.substr(eq == std::string::npos ? 0 : eq + 1));
    std::vector<int> z;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        z.push_back(std::stoi(line));
    }
    return Membership(std::move(z), K);
}

} // namespace dch
