#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitroa/analysis.hpp"
#include "splitroa/pipeline.hpp"

namespace splitroa::cli {

/// Everything the command line can set. Unset optionals fall back to the
/// config file, then to the builtin defaults.
struct RunConfig {
  std::string config_path;
  std::string builtin;
  std::optional<std::uint32_t> degree;
  std::optional<std::string> cells;
  std::optional<std::string> time_knots;
  std::optional<std::uint64_t> seed;
  std::size_t samples = kDefaultSamples;
  std::filesystem::path out = "out";
  std::string dump_sdp;
  double tol = 1e-8;
  int max_iters = 200;
  std::string backend = "native";
  /// Grid points per axis; default depends on the state dimension.
  std::optional<std::size_t> grid;
  bool repair = true;
  bool log = false;
};

/// Where a run failed, for messages and exit codes.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunManifest {
  std::string config;
  std::string problem;
  std::uint32_t degree = 0;
  std::size_t cells = 0;
  std::vector<double> time_knots;
  std::vector<std::string> outputs;
  double compile_seconds = 0.0;
  double solve_seconds = 0.0;
  double analyze_seconds = 0.0;
  std::size_t nnz = 0;
  std::string status;
  bool ok = false;
  double objective = 0.0;
  VolumeEstimate v_volume;
  VolumeEstimate w_volume;

  nlohmann::json to_json() const;
};

/// Resolves the problem the config describes, with overrides applied.
RoaProblem resolve_problem(const RunConfig& config);

/// Compiles, solves, analyses and writes result.json, grid.csv and
/// manifest.json into config.out. Throws StageError for failures before the
/// solve; a failed solve is reported through the manifest.
RunManifest run(const RunConfig& config);

enum class SweepAxis { kDegree, kCells };

/// One run per value in config.out/<axis>_<value>, then sweep.csv with
/// value,nnz,time,volume,std_error,status. Failed runs are recorded and the
/// sweep continues.
std::vector<RunManifest> sweep(const RunConfig& config, SweepAxis axis, const std::vector<std::string>& values);

/// The command line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace splitroa::cli
