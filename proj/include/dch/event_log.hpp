#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dch {

struct Event {
    int sender = 0;
    int receiver = 0;
    double time = 0.0;

    friend bool operator==(const Event&, const Event&) = default;
};

// Timestamped directed relational events over [0, horizon_T], sorted
// nondecreasing by time (ties broken by sender then receiver so merges are
// deterministic).
struct EventLog {
    std::vector<Event> events;
    double horizon_T = 0.0;
    int n = 0;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }

    void validate() const {
        if (n < 1) throw std::invalid_argument("EventLog: need at least one node");
        double prev = 0.0;
        for (const Event& e : events) {
            if (e.sender < 0 || e.sender >= n || e.receiver < 0 || e.receiver >= n)
                throw std::out_of_range("EventLog: node index out of range");
            if (e.time < 0.0 || e.time > horizon_T)
                throw std::invalid_argument("EventLog: event time outside [0, T]");
            if (e.time < prev) throw std::invalid_argument("EventLog: events not sorted by time");
            prev = e.time;
        }
    }

    static bool time_order(const Event& a, const Event& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.sender != b.sender) return a.sender < b.sender;
        return a.receiver < b.receiver;
    }
};

} // namespace dch
