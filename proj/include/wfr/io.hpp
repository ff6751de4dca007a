#pragma once

#include "wfr/mc.hpp"
#include "wfr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wfr {

// Numbers are written with '.' decimal separators, UTF-8, CRLF line ends
// (RFC 4180).  Dataset files use shortest round-trip formatting so a
// write/read cycle reproduces the doubles exactly; summary files use 6
// significant digits.

std::string format_full(double x);   // shortest round-trip
std::string format_sig6(double x);   // 6 significant digits

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Minimal RFC-4180 numeric reader: optional quotes, CRLF or LF, no embedded
// separators.  Throws validation_error with the file and line on bad input.
CsvTable read_csv(const std::filesystem::path& path);

// X.csv (x1..xN), yW.csv (y, w1..wp), truth.csv (object,i,j,value; only when
// the dataset carries truth) and config.json when cfg is given.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                   const DgpConfig* cfg = nullptr);

// Reads the triplet back; truth.csv is optional.
Dataset load_dataset(const std::filesystem::path& dir);

DgpConfig parse_dgp_config(const std::string& json_text);
std::string dump_dgp_config(const DgpConfig& cfg);

ExperimentSpec parse_experiment_spec(const std::string& json_text);

void write_summary_csv(const McSummary& summary, const std::filesystem::path& path);
void write_power_csv(const std::vector<PowerRow>& rows, const std::filesystem::path& path);

// FNV-1a 64-bit over raw bytes; stable across platforms.
std::uint64_t fnv1a(const std::string& bytes);

// Run manifest: command, config digest, seed, timestamp, versions.  The
// timestamp is the only non-deterministic output of any command.
std::string manifest_json(const std::string& command, const std::string& config_bytes,
                          std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace wfr
