#include "gridsim/case.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gridsim {

double GridCase::total_g_max() const {
    double s = 0.0;
    for (const auto& g : generators)
        s += g.g_max;
    return s;
}

double GridCase::total_g_min() const {
    double s = 0.0;
    for (const auto& g : generators)
        s += g.g_min;
    return s;
}

namespace {

[[noreturn]] void parse_fail(const std::string& name, int lineno, const std::string& msg) {
    std::ostringstream os;
    os << name << ":" << lineno << ": " << msg;
    throw CaseError(os.str());
}

} // namespace

GridCase parse_case(std::istream& in, const std::string& name) {
    GridCase gc;
    gc.reference_bus = -1;
    std::string raw;
    std::string section;
    int lineno = 0;
    bool ref_seen = false;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw.erase(hash);
        std::istringstream ls(raw);
        std::string first;
        if (!(ls >> first))
            continue;
        if (first == "BUS" || first == "LINE" || first == "GEN" || first == "WIND" || first == "REF") {
            section = first;
            std::string extra;
            if (ls >> extra)
                parse_fail(name, lineno, "unexpected token after section header: " + extra);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(first[0])))
            parse_fail(name, lineno, "unknown section name: " + first);
        if (section.empty())
            parse_fail(name, lineno, "record before any section header");

        // first already holds the leading numeric field of the record
        std::istringstream rs(raw);
        auto field = [&](const char* what) {
            double v;
            if (!(rs >> v))
                parse_fail(name, lineno, std::string("missing or malformed field: ") + what);
            return v;
        };
        auto int_field = [&](const char* what) {
            double v = field(what);
            if (v != std::floor(v))
                parse_fail(name, lineno, std::string("expected integer field: ") + what);
            return static_cast<int>(v);
        };
        if (section == "BUS") {
            Bus b;
            b.id = int_field("bus id");
            b.has_load = int_field("has_load") != 0;
            gc.buses.push_back(b);
        } else if (section == "LINE") {
            Line l;
            l.id = int_field("line id");
            l.from_bus = int_field("from_bus");
            l.to_bus = int_field("to_bus");
            l.susceptance = field("susceptance");
            l.thermal_limit = field("thermal_limit");
            l.fail_prob = field("fail_prob");
            l.repair_steps = int_field("repair_steps");
            gc.lines.push_back(l);
        } else if (section == "GEN") {
            Generator g;
            g.id = int_field("gen id");
            g.bus = int_field("bus");
            g.g_min = field("g_min");
            g.g_max = field("g_max");
            g.cost = field("cost");
            gc.generators.push_back(g);
        } else if (section == "WIND") {
            WindGenerator w;
            w.id = int_field("wind id");
            w.bus = int_field("bus");
            w.capacity = field("capacity");
            gc.wind.push_back(w);
        } else { // REF
            if (ref_seen)
                parse_fail(name, lineno, "duplicate REF record");
            gc.reference_bus = int_field("reference bus");
            ref_seen = true;
        }
        std::string extra;
        if (rs >> extra)
            parse_fail(name, lineno, "trailing token: " + extra);
    }
    if (!ref_seen) {
        // default: the bus hosting the largest-capacity generator
        double best = -1.0;
        for (const auto& g : gc.generators) {
            if (g.g_max > best) {
                best = g.g_max;
                gc.reference_bus = g.bus;
            }
        }
    }
    validate_case(gc);
    return gc;
}

GridCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CaseError("cannot open case file: " + path);
    return parse_case(in, path);
}

void validate_case(const GridCase& gc) {
    const int nb = gc.n_buses();
    if (nb < 2)
        throw CaseError("case must have at least 2 buses");
    std::vector<bool> seen(nb, false);
    for (const auto& b : gc.buses) {
        if (b.id < 0 || b.id >= nb || seen[b.id])
            throw CaseError("bus ids must be contiguous 0..n_b-1 without duplicates");
        seen[b.id] = true;
    }
    // records must be stored in id order so indices double as ids
    for (int i = 0; i < nb; ++i)
        if (gc.buses[i].id != i)
            throw CaseError("bus records must appear in id order");
    auto check_bus_ref = [&](int bus, const std::string& who) {
        if (bus < 0 || bus >= nb)
            throw CaseError(who + " references unknown bus " + std::to_string(bus));
    };
    for (int i = 0; i < gc.n_lines(); ++i) {
        const Line& l = gc.lines[i];
        if (l.id != i)
            throw CaseError("line records must appear in id order");
        check_bus_ref(l.from_bus, "line " + std::to_string(l.id));
        check_bus_ref(l.to_bus, "line " + std::to_string(l.id));
        if (l.from_bus == l.to_bus)
            throw CaseError("line " + std::to_string(l.id) + " is a self-loop");
        if (!(l.susceptance > 0.0) || !std::isfinite(l.susceptance))
            throw CaseError("line " + std::to_string(l.id) + " needs susceptance > 0");
        if (!(l.thermal_limit > 0.0) || !std::isfinite(l.thermal_limit))
            throw CaseError("line " + std::to_string(l.id) + " needs finite thermal_limit > 0");
        if (l.fail_prob < 0.0 || l.fail_prob > 1.0)
            throw CaseError("line " + std::to_string(l.id) + " fail_prob outside [0,1]");
        if (l.repair_steps < 1)
            throw CaseError("line " + std::to_string(l.id) + " repair_steps must be >= 1");
    }
    if (gc.generators.empty())
        throw CaseError("case needs at least one controllable generator");
    for (int i = 0; i < gc.n_generators(); ++i) {
        const Generator& g = gc.generators[i];
        if (g.id != i)
            throw CaseError("generator records must appear in id order");
        check_bus_ref(g.bus, "generator " + std::to_string(g.id));
        if (g.g_min < 0.0 || g.g_min > g.g_max)
            throw CaseError("generator " + std::to_string(g.id) + " needs 0 <= g_min <= g_max");
        if (!(g.g_max > 0.0))
            throw CaseError("generator " + std::to_string(g.id) + " needs g_max > 0");
    }
    for (int i = 0; i < gc.n_wind(); ++i) {
        const WindGenerator& w = gc.wind[i];
        if (w.id != i)
            throw CaseError("wind records must appear in id order");
        check_bus_ref(w.bus, "wind unit " + std::to_string(w.id));
        if (!(w.capacity > 0.0) || !std::isfinite(w.capacity))
            throw CaseError("wind unit " + std::to_string(w.id) + " needs finite capacity > 0");
    }
    check_bus_ref(gc.reference_bus, "reference bus");
    std::vector<bool> no_outage(gc.lines.size(), false);
    if (connected_components(gc, no_outage).count() != 1)
        throw CaseError("base graph is disconnected");
}

Islands connected_components(const GridCase& gc, const std::vector<bool>& outage_mask) {
    const int nb = gc.n_buses();
    Islands out;
    out.label.assign(nb, -1);
    std::vector<std::vector<int>> adj(nb);
    for (const auto& l : gc.lines) {
        if (l.id < static_cast<int>(outage_mask.size()) && outage_mask[l.id])
            continue;
        adj[l.from_bus].push_back(l.to_bus);
        adj[l.to_bus].push_back(l.from_bus);
    }
    std::vector<int> stack;
    for (int s = 0; s < nb; ++s) {
        if (out.label[s] >= 0)
            continue;
        const int isl = out.count();
        out.groups.emplace_back();
        stack.push_back(s);
        out.label[s] = isl;
        while (!stack.empty()) {
            int b = stack.back();
            stack.pop_back();
            out.groups[isl].push_back(b);
            for (int nxt : adj[b]) {
                if (out.label[nxt] < 0) {
                    out.label[nxt] = isl;
                    stack.push_back(nxt);
                }
            }
        }
        std::sort(out.groups[isl].begin(), out.groups[isl].end());
    }
    return out;
}

std::vector<bool> outage_mask_from_countdown(const std::vector<int>& countdown) {
    std::vector<bool> mask(countdown.size(), false);
    for (size_t i = 0; i < countdown.size(); ++i)
        mask[i] = countdown[i] > 0;
    return mask;
}

std::vector<int> apply_outage(std::vector<int> countdown, int line, int repair_steps) {
    if (line < 0 || line >= static_cast<int>(countdown.size()))
        throw std::out_of_range("apply_outage: line id out of range");
    countdown[line] = repair_steps;
    return countdown;
}

} // namespace gridsim
