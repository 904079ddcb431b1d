#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/node_id.hpp"

namespace tdm::bench {

/// pairwise: round-robin schedule, one peer per slot.
/// multipeer: clique schedule, all peers in a single slot.
enum class Mode { pairwise, multipeer };
enum class TransportKind { sim, tcp_loopback };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct Config {
  std::vector<Mode> modes{Mode::pairwise, Mode::multipeer};
  std::vector<std::uint32_t> node_counts{10, 20, 30, 40};
  std::uint32_t repetitions = 10;
  TransportKind transport = TransportKind::sim;
  std::size_t payload_bytes = 64;
  std::uint64_t seed = 1;
  std::optional<std::chrono::milliseconds> receive_timeout;
  std::string output_path = "bench.csv";
};

/// Throws std::invalid_argument on an unusable configuration.
void validate(const Config& cfg);

struct Record {
  Mode mode;
  std::uint32_t node_count;
  std::uint32_t run_index;
  std::uint32_t node_id;
  double elapsed_seconds;
  bool failed = false;
};

struct RunFailure {
  Mode mode;
  std::uint32_t node_count;
  std::uint32_t run_index;
  std::string reason;
};

struct Outcome {
  std::vector<Record> records;
  std::vector<RunFailure> failures;

  bool ok() const noexcept { return failures.empty(); }
};

/// What one node ended up holding: payload per peer.
using ReceivedSet = std::map<NodeId, Bytes>;

struct RunResult {
  std::vector<double> elapsed_seconds;  ///< index i is node i + 1
  std::vector<ReceivedSet> received;    ///< index i is node i + 1
  std::optional<std::string> error;
};

/// Deterministic per-node payload of `size` bytes.
Bytes node_payload(std::uint64_t seed, NodeId node, std::size_t size);

/// Runs every node of one configuration on its own thread and times each
/// node's full pass over the schedule. Setup and connection establishment are
/// outside the timed section.
RunResult run_once(Mode mode, std::uint32_t node_count, TransportKind transport, std::size_t payload_bytes,
                   std::uint64_t seed, std::optional<std::chrono::milliseconds> receive_timeout = std::nullopt);

/// Empty string when every node holds exactly the other nodes' payloads.
std::string verify_complete(const RunResult& run, std::uint64_t seed, std::size_t payload_bytes);

using Progress = std::function<void(Mode, std::uint32_t node_count, std::uint32_t run_index)>;

/// Runs all (mode, node count, repetition) combinations. A failed run is
/// recorded with failed=true and reported in Outcome::failures; the benchmark
/// continues with the next run.
Outcome run_benchmark(const Config& cfg, const Progress& progress = {});

struct AggregateRow {
  Mode mode;
  std::uint32_t node_count;
  double mean_seconds;
  double stddev_seconds;  ///< sample standard deviation, 0 for a single sample
  std::size_t sample_count;
};

struct Aggregate {
  std::vector<AggregateRow> rows;  ///< sorted by (mode, node count)
  /// Groups with records but no successful sample.
  std::vector<std::pair<Mode, std::uint32_t>> skipped_groups;
  std::map<std::pair<Mode, std::uint32_t>, std::size_t> failed_samples;
};

Aggregate aggregate(std::span<const Record> records);

class InsufficientPoints : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit y ~ c2 n^2 + c1 n + c0.
struct QuadraticFit {
  double c2 = 0;
  double c1 = 0;
  double c0 = 0;
  double r_squared = 0;
  std::vector<double> residuals;  ///< observed minus fitted, in input order

  double predict(double n) const { return (c2 * n + c1) * n + c0; }
};

/// Needs at least three distinct x values.
QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y);

/// Fits mean elapsed against node count for the rows of one mode.
QuadraticFit fit_quadratic(std::span<const AggregateRow> rows);

/// Writes `path` as CSV (mode,nodeCount,meanElapsed,stddev,sampleCount) and
/// `path + ".summary.txt"` with the fits and the pairwise/multipeer ratio per
/// node count when both modes are present.
void emit_results(std::span<const AggregateRow> rows, const std::map<Mode, QuadraticFit>& fits,
                  const std::string& path);

/// One line per raw record.
void emit_records(std::span<const Record> records, const std::string& path);

}  // namespace tdm::bench
