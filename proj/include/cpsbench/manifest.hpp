#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpsbench/instruction.hpp"

namespace cpsbench::pipeline {

// Invalid user input (bad manifest, bad flag value, missing dataset).
// The CLI maps this to exit code 2; everything else is internal (1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunManifest {
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool combined = true;
  std::vector<ExperimentParams> experiments;
};

// Plain block-structured text:
//   [output]
//   dir = out
//   seed = 42
//   combined = true
//
//   [experiment]
//   id = vel_50
//   workload = sorting
//   velocity = 50
//   acceleration = 70
//   belt = 40
//   payload = 195
//   rounds = 10
//
// '#' starts a comment. Unknown keys, bad values, out-of-range settings
// and duplicate ids raise UsageError with "<origin>:<line>: field '<key>':"
// diagnostics.
RunManifest parse_manifest_text(const std::string& text,
                                const std::string& origin);
RunManifest parse_manifest(const std::string& path);
std::string render_manifest(const RunManifest& m);

}  // namespace cpsbench::pipeline
