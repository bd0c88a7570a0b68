#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridsim {

struct Bus {
    int id = 0;
    bool has_load = false;
};

struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double susceptance = 0.0;   // MW per radian
    double thermal_limit = 0.0; // MW
    double fail_prob = 0.0;     // per RT step, while operational
    int repair_steps = 1;       // countdown value assigned on failure
};

struct Generator {
    int id = 0;
    int bus = 0;
    double g_min = 0.0;
    double g_max = 0.0;
    double cost = 0.0; // currency/MWh, used by the Cost baseline only
};

struct WindGenerator {
    int id = 0;
    int bus = 0;
    double capacity = 0.0; // MW
};

class CaseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Static network description. Immutable after load; safe to share across
/// threads.
struct GridCase {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<WindGenerator> wind;
    int reference_bus = 0;

    int n_buses() const { return static_cast<int>(buses.size()); }
    int n_lines() const { return static_cast<int>(lines.size()); }
    int n_generators() const { return static_cast<int>(generators.size()); }
    int n_wind() const { return static_cast<int>(wind.size()); }

    double total_g_max() const;
    double total_g_min() const;
};

/// Parses and validates a case file. Throws CaseError with "file:line:"
/// location on parse problems and with the violated invariant on
/// validation problems.
GridCase load_case(const std::string& path);
GridCase parse_case(std::istream& in, const std::string& name);

/// Checks all GridCase invariants (contiguous bus ids, referenced ids
/// exist, connected base graph, ...). Throws CaseError.
void validate_case(const GridCase& gc);

struct Islands {
    std::vector<int> label;               // bus -> island index
    std::vector<std::vector<int>> groups; // island -> sorted bus list
    int count() const { return static_cast<int>(groups.size()); }
};

/// Partition of buses into islands induced by removing the masked lines.
/// outage_mask has one entry per line; true = line out of service.
Islands connected_components(const GridCase& gc, const std::vector<bool>& outage_mask);

std::vector<bool> outage_mask_from_countdown(const std::vector<int>& countdown);

/// Sets the countdown for one line to repair_steps, leaving the rest
/// untouched. Re-outage of an already failed line resets its countdown.
std::vector<int> apply_outage(std::vector<int> countdown, int line, int repair_steps);

} // namespace gridsim
