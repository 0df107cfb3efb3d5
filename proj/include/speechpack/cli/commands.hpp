#pragma once

// Subcommand bodies. Each takes a plain options struct and a Console and
// returns the process exit code; the binary in tools/ only parses flags.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "speechpack/cli/sources.hpp"
#include "speechpack/core.hpp"
#include "speechpack/formats/shard_pool.hpp"

namespace speechpack::cli {

struct Console {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;

  std::ostream& info() const;
};

struct PackOptions {
  std::string input;  // pre-training jsonl
  std::size_t shard_size = 1000;
  std::string out_dir;
  std::string manifest_name = "shards.list";
};

int cmd_pack(const PackOptions& opts, const Console& console);

struct UnpackOptions {
  std::string input;  // shard list, or a single .tar
  std::string out_dir;
  std::string jsonl_name = "data.jsonl";
  std::size_t workers = 1;
};

int cmd_unpack(const UnpackOptions& opts, const Console& console);

enum class ValidateKind { kPretrain, kSft, kShards };

struct ValidateOptions {
  std::string path;
  ValidateKind kind = ValidateKind::kPretrain;
};

/// 0 when clean, 1 when there are findings, 2 when the path is unreadable.
int cmd_validate(const ValidateOptions& opts, const Console& console);

struct InspectOptions {
  std::string path;
  std::optional<ValidateKind> kind;  // guessed from the path when unset
  std::size_t limit = 20;
  RenderSetup render;
};

int cmd_inspect(const InspectOptions& opts, const Console& console);

struct SimulateOptions {
  SourceSpec source;
  std::vector<StrategyConfig> strategies;
  RenderSetup render;
  std::string csv_path;  // empty: CSV to console.out
};

struct SimulationResult {
  std::vector<StrategyReport> reports;
  std::vector<std::string> failures;  // "strategy: error"
  std::vector<double> relative_cost;  // parallel to reports
  std::string csv;
  bool ordering_evaluated = false;  // all three strategies ran
  bool ordering_holds = false;      // pack < dynamic < static
};

inline const std::string kCsvHeader =
    "strategy,config,num_batches,real_tokens,padded_tokens,waste_ratio,relative_cost";

/// The paired comparison itself; cmd_simulate adds printing and file output.
SimulationResult simulate(const SimulateOptions& opts, SourceStats* stats = nullptr);
int cmd_simulate(const SimulateOptions& opts, const Console& console);

struct BenchOptions {
  std::string manifest;
  std::vector<std::string> shards;  // used when manifest is empty
  std::size_t workers = 1;
  std::size_t max_samples = 0;      // 0: no cap
  std::chrono::milliseconds duration{0};  // 0: no limit
  formats::HttpOptions http;
};

struct BenchReport {
  std::size_t samples = 0;
  std::size_t bytes = 0;
  double seconds = 0.0;
  double samples_per_second = 0.0;
  double megabytes_per_second = 0.0;
  std::vector<formats::WorkerStats> workers;
  std::vector<std::string> errors;
};

BenchReport bench(const BenchOptions& opts);
int cmd_bench(const BenchOptions& opts, const Console& console);

struct EmitOptions {
  SourceSpec source;
  StrategyConfig strategy = PackConfig{};
  RenderSetup render;
};

/// Returns false when the consumer has gone away; emission then stops.
using FrameWriterFn = std::function<bool(std::span<const std::uint8_t>)>;

int cmd_emit(const EmitOptions& opts, const FrameWriterFn& write, const Console& console);

}  // namespace speechpack::cli
