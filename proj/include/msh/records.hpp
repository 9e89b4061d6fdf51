#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msh/errors.hpp"
#include "msh/version.hpp"

namespace msh {

/// One persisted run: subcommand, resolved configuration, seed, version and
/// the result payload, serialized as a single JSON line.  Replaying the same
/// config and seed reproduces the payload bit-for-bit; wall time is reported
/// on the log stream instead of the record so output files stay byte-stable.
struct RunRecord {
    std::string subcommand;
    nlohmann::json config;
    std::uint64_t seed = 0;
    nlohmann::json payload;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        j["config"] = config;
        j["seed"] = seed;
        j["version"] = MSH_VERSION;
        j["payload"] = payload;
        return j;
    }

    std::string to_line() const { return to_json().dump(); }

    static RunRecord from_json(const nlohmann::json& j) {
        RunRecord r;
        r.subcommand = j.at("subcommand").get<std::string>();
        r.config = j.at("config");
        r.seed = j.at("seed").get<std::uint64_t>();
        r.payload = j.at("payload");
        return r;
    }
};

inline std::vector<RunRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw argument_error("cannot open records file: " + path);
    std::vector<RunRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw argument_error("malformed JSON line in " + path);
        out.push_back(RunRecord::from_json(j));
    }
    return out;
}

/// Minimal CSV writer: flat rows, fixed column order.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(const std::vector<double>& values) {
        if (values.size() != columns_.size())
            throw argument_error("CsvWriter: row width mismatch");
        rows_.push_back(values);
    }

    std::string str() const {
        std::string out;
        for (std::size_t c = 0; c < columns_.size(); ++c)
            out += (c ? "," : "") + columns_[c];
        out += "\n";
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                out += (c ? "," : "") + format_shortest(row[c]);
            }
            out += "\n";
        }
        return out;
    }

    /// Shortest decimal form that round-trips the double.
    static std::string format_shortest(double v) {
        char buf[40];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw resource_error("cannot write CSV file: " + path);
        out << str();
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

} // namespace msh
