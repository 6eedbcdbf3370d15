#pragma once

#include "biogate/biogate.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace support {

inline std::filesystem::path source_dir() { return BIOGATE_SOURCE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline biogate::Netlist netlist(std::string_view text) {
    auto r = biogate::parse_netlist(text, "test.bgn");
    if (!r.ok()) throw std::runtime_error(biogate::format_error(r.errors.front()));
    return std::move(*r.value);
}

inline biogate::Schedule schedule(std::string_view text) {
    auto r = biogate::parse_schedule(text, "test.bgs");
    if (!r.ok()) throw std::runtime_error(biogate::format_error(r.errors.front()));
    return std::move(*r.value);
}

inline std::string csv(const biogate::TraceSet& t) {
    std::ostringstream s;
    biogate::export_csv(t, s);
    return s.str();
}

}  // namespace support
