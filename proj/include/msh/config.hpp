#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msh/errors.hpp"
#include "msh/green.hpp"
#include "msh/potential.hpp"

namespace msh {

/// Flat key-value config with dotted sections:
///
///   # comment
///   harmonics = [[1, 0, 1]]
///   schedule.kind = geometric
///   schedule.rho = 8
///   n_max = 2
///
/// Values are scalars or JSON-style nested lists.
class Config {
  public:
    static Config parse(std::istream& in) {
        Config cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r\n") != std::string::npos)
                    throw argument_error("config line " + std::to_string(lineno) + ": expected key = value");
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw argument_error("config line " + std::to_string(lineno) + ": empty key or value");
            cfg.entries_[key] = value;
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw argument_error("cannot open config file: " + path);
        return parse(in);
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw argument_error("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    double get_number(const std::string& key) const {
        const std::string s = get_string(key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw argument_error("");
            return v;
        } catch (...) {
            throw argument_error("config: key '" + key + "' is not a number: " + s);
        }
    }

    double get_number(const std::string& key, double fallback) const {
        return has(key) ? get_number(key) : fallback;
    }

    std::int64_t get_int(const std::string& key) const {
        const double v = get_number(key);
        const auto i = static_cast<std::int64_t>(std::llround(v));
        if (static_cast<double>(i) != v)
            throw argument_error("config: key '" + key + "' must be an integer");
        return i;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    nlohmann::json get_list(const std::string& key) const {
        const std::string s = get_string(key);
        nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
        if (j.is_discarded() || !j.is_array())
            throw argument_error("config: key '" + key + "' is not a list: " + s);
        return j;
    }

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> entries_;
};

inline std::vector<Harmonic> parse_harmonics(const nlohmann::json& list) {
    std::vector<Harmonic> hs;
    for (const auto& item : list) {
        if (!item.is_array() || item.size() != 3)
            throw argument_error("harmonics entries must be [k, a, b] triples");
        hs.push_back(Harmonic{item[0].get<int>(), item[1].get<double>(), item[2].get<double>()});
    }
    return hs;
}

/// Potential description file -> MultiScalePotential.  `harmonics` gives the
/// first potential of the cycle; `harmonics.1`, `harmonics.2`, ... extend it.
inline MultiScalePotential load_potential(const Config& cfg) {
    std::vector<PeriodicPotential> pots;
    pots.emplace_back(cfg.has("harmonics") ? parse_harmonics(cfg.get_list("harmonics"))
                                           : std::vector<Harmonic>{});
    for (int i = 1; cfg.has("harmonics." + std::to_string(i)); ++i)
        pots.emplace_back(parse_harmonics(cfg.get_list("harmonics." + std::to_string(i))));

    const auto n_max = static_cast<int>(cfg.get_int("n_max", 0));
    const std::string kind = cfg.get_string("schedule.kind", "geometric");
    const auto levels = static_cast<int>(cfg.get_int("schedule.levels", n_max + 8));
    ScaleSchedule sched;
    if (kind == "geometric") {
        sched = ScaleSchedule::geometric(cfg.get_int("schedule.rho", 8), levels);
    } else if (kind == "explicit") {
        std::vector<std::int64_t> ratios;
        for (const auto& r : cfg.get_list("schedule.ratios")) ratios.push_back(r.get<std::int64_t>());
        sched = ScaleSchedule::explicit_ratios(std::move(ratios));
    } else if (kind == "stretched") {
        sched = ScaleSchedule::stretched(cfg.get_number("schedule.rho"),
                                         cfg.get_number("schedule.alpha"), levels);
    } else {
        throw argument_error("schedule.kind must be geometric, explicit or stretched");
    }
    return MultiScalePotential(std::move(pots), std::move(sched), n_max);
}

inline MultiScalePotential load_potential_file(const std::string& path) {
    return load_potential(Config::load(path));
}

/// Coefficient description file for the Green-function checks:
///   kind = trig | constant | piecewise
///   base = 1.5            (trig/constant)
///   harmonics = [[1, 0.3, 0]]
///   cells = [1.0, 2.0, ...]  (piecewise)
inline Coefficient load_coefficient(const Config& cfg) {
    const std::string kind = cfg.get_string("kind", "trig");
    if (kind == "constant") return Coefficient::constant(cfg.get_number("base"));
    if (kind == "piecewise") {
        std::vector<double> cells;
        for (const auto& v : cfg.get_list("cells")) cells.push_back(v.get<double>());
        return Coefficient::piecewise(std::move(cells));
    }
    if (kind == "trig") {
        const PeriodicPotential u(cfg.has("harmonics") ? parse_harmonics(cfg.get_list("harmonics"))
                                                       : std::vector<Harmonic>{});
        return Coefficient::from_trig(u, cfg.get_number("base", 1.0));
    }
    throw argument_error("coefficient kind must be trig, constant or piecewise");
}

inline Coefficient load_coefficient_file(const std::string& path) {
    return load_coefficient(Config::load(path));
}

} // namespace msh
