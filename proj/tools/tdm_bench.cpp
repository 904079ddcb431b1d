// Benchmark harness and schedule utilities for the slot-synchronized exchange.

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "tdm/bench.hpp"
#include "tdm/endpoint.hpp"
#include "tdm/schedule.hpp"
#include "tdm/tcp_transport.hpp"

namespace {

using namespace tdm;

std::vector<std::uint32_t> parse_node_counts(const std::string& text) {
  auto number = [&](std::string_view token) {
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size())
      throw CLI::ValidationError("--nodes", "bad number '" + std::string(token) + "'");
    return value;
  };

  std::vector<std::uint32_t> counts;
  if (text.find(':') != std::string::npos) {
    std::vector<std::uint32_t> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(number(item));
    if (parts.size() != 3 || parts[2] == 0 || parts[0] > parts[1])
      throw CLI::ValidationError("--nodes", "expected first:last:step");
    for (auto n = parts[0]; n <= parts[1]; n += parts[2]) counts.push_back(n);
    return counts;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) counts.push_back(number(item));
  return counts;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_bench(const bench::Config& cfg, const std::string& records_path) {
  bench::validate(cfg);
  const bool tty = ::isatty(STDERR_FILENO) != 0;
  bench::Progress progress;
  if (tty) {
    progress = [](bench::Mode mode, std::uint32_t n, std::uint32_t run) {
      std::cerr << "\r" << bench::to_string(mode) << " n=" << n << " run " << run + 1 << "        " << std::flush;
    };
  }
  const auto outcome = bench::run_benchmark(cfg, progress);
  if (tty) std::cerr << '\n';

  const auto agg = bench::aggregate(outcome.records);
  std::map<bench::Mode, bench::QuadraticFit> fits;
  for (auto mode : cfg.modes) {
    std::vector<bench::AggregateRow> rows;
    for (const auto& r : agg.rows)
      if (r.mode == mode) rows.push_back(r);
    try {
      fits[mode] = bench::fit_quadratic(rows);
    } catch (const bench::InsufficientPoints&) {
      std::cerr << bench::to_string(mode) << ": fewer than 3 node counts, no quadratic fit\n";
    }
  }
  bench::emit_results(agg.rows, fits, cfg.output_path);
  if (!records_path.empty()) bench::emit_records(outcome.records, records_path);

  std::cout << std::left << std::setw(10) << "mode" << std::right << std::setw(7) << "nodes" << std::setw(14)
            << "mean [s]" << std::setw(14) << "stddev [s]" << std::setw(9) << "samples" << '\n';
  for (const auto& r : agg.rows)
    std::cout << std::left << std::setw(10) << bench::to_string(r.mode) << std::right << std::setw(7) << r.node_count
              << std::setw(14) << r.mean_seconds << std::setw(14) << r.stddev_seconds << std::setw(9)
              << r.sample_count << '\n';
  for (const auto& [mode, fit] : fits)
    std::cout << bench::to_string(mode) << " fit: " << fit.c2 << "*n^2 + " << fit.c1 << "*n + " << fit.c0
              << "  R^2=" << fit.r_squared << '\n';
  for (const auto& [mode, n] : agg.skipped_groups)
    std::cout << "skipped " << bench::to_string(mode) << " n=" << n << ": no successful runs\n";
  for (const auto& f : outcome.failures)
    std::cerr << "FAILED " << bench::to_string(f.mode) << " n=" << f.node_count << " run " << f.run_index << ": "
              << f.reason << '\n';
  std::cout << "wrote " << cfg.output_path << " and " << cfg.output_path << ".summary.txt\n";
  return outcome.ok() ? 0 : 1;
}

int run_node(std::uint32_t id, const std::string& listen, const std::string& peers_path,
             const std::string& schedule_path, const std::string& payload, int timeout_ms, std::size_t max_frame) {
  const auto schedule = parse_schedule(read_file(schedule_path));
  if (auto report = validate_schedule(schedule); !report) {
    for (const auto& v : report.violations) std::cerr << v.message << '\n';
    return 2;
  }
  TcpOptions opts;
  opts.listen = parse_link_address(listen);
  opts.peers = parse_peer_table(read_file(peers_path));
  opts.max_body_bytes = max_frame;
  EndpointOptions eopts;
  if (timeout_ms > 0) eopts.receive_timeout = std::chrono::milliseconds(timeout_ms);

  Endpoint endpoint(NodeId(id), std::make_unique<TcpTransport>(NodeId(id), opts), eopts);
  const auto results = run_schedule(endpoint, schedule, [&](std::uint64_t) { return to_bytes(payload); });
  for (const auto& [slot, payloads] : results) {
    const auto& peers = *schedule.slots[slot].peers(endpoint.id());
    std::cout << "slot " << slot << ':';
    for (std::size_t k = 0; k < peers.size(); ++k)
      std::cout << ' ' << peers[k] << '=' << std::string(payloads[k].begin(), payloads[k].end());
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slot-synchronized peer exchange: benchmark and schedule tools"};
  app.require_subcommand(0, 1);

  bench::Config cfg;
  std::string mode = "both";
  std::string nodes = "10,20,30,40";
  std::string transport = "sim";
  int timeout_ms = 0;
  std::string records_path;
  app.add_option("--mode", mode, "pairwise, multipeer or both")
      ->check(CLI::IsMember({"pairwise", "multipeer", "both"}))
      ->capture_default_str();
  app.add_option("--nodes", nodes, "node counts: comma list or first:last:step")->capture_default_str();
  app.add_option("--reps", cfg.repetitions, "repetitions per node count")->capture_default_str();
  app.add_option("--transport", transport, "sim or tcp")->check(CLI::IsMember({"sim", "tcp"}))->capture_default_str();
  app.add_option("--payload-bytes", cfg.payload_bytes, "payload size per node")->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for payloads and delivery order")->capture_default_str();
  app.add_option("--timeout-ms", timeout_ms, "receive watchdog, 0 = none")->capture_default_str();
  app.add_option("--out", cfg.output_path, "aggregate CSV path")->capture_default_str();
  app.add_option("--records", records_path, "optional CSV of raw per-node records");

  auto* sched_cmd = app.add_subcommand("schedule", "write a generated schedule");
  std::string kind = "round-robin";
  std::uint32_t sched_nodes = 4;
  std::string sched_out;
  sched_cmd->add_option("--kind", kind, "round-robin or clique")
      ->check(CLI::IsMember({"round-robin", "clique"}))
      ->capture_default_str();
  sched_cmd->add_option("--nodes", sched_nodes, "node count")->required();
  sched_cmd->add_option("--out", sched_out, "output file (default stdout)");

  auto* validate_cmd = app.add_subcommand("validate", "check a schedule file");
  std::string validate_path;
  validate_cmd->add_option("file", validate_path)->required()->check(CLI::ExistingFile);

  auto* node_cmd = app.add_subcommand("node", "run one node of a schedule over TCP");
  std::uint32_t node_id = 0;
  std::string listen, peers_path, schedule_path, payload;
  int node_timeout = 0;
  std::size_t max_frame = kDefaultMaxBodyBytes;
  node_cmd->add_option("--id", node_id, "this node's id")->required()->check(CLI::PositiveNumber);
  node_cmd->add_option("--listen", listen, "host:port to listen on")->required();
  node_cmd->add_option("--peers", peers_path, "peer table file")->required()->check(CLI::ExistingFile);
  node_cmd->add_option("--schedule", schedule_path, "schedule file")->required()->check(CLI::ExistingFile);
  node_cmd->add_option("--payload", payload, "payload sent in every slot")->required();
  node_cmd->add_option("--timeout-ms", node_timeout, "receive watchdog, 0 = none");
  node_cmd->add_option("--max-frame", max_frame, "frame body limit in bytes")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sched_cmd) {
      const auto s = kind == "clique" ? clique_schedule(sched_nodes) : round_robin_schedule(sched_nodes);
      if (sched_out.empty()) {
        std::cout << format_schedule(s);
      } else {
        std::ofstream out(sched_out);
        if (!(out << format_schedule(s))) throw std::runtime_error("cannot write " + sched_out);
      }
      return 0;
    }
    if (*validate_cmd) {
      const auto report = validate_schedule(parse_schedule(read_file(validate_path)));
      for (const auto& v : report.violations) std::cout << v.message << '\n';
      std::cout << (report.ok() ? "valid" : "invalid") << '\n';
      return report.ok() ? 0 : 1;
    }
    if (*node_cmd) return run_node(node_id, listen, peers_path, schedule_path, payload, node_timeout, max_frame);

    cfg.modes.clear();
    if (mode != "multipeer") cfg.modes.push_back(bench::Mode::pairwise);
    if (mode != "pairwise") cfg.modes.push_back(bench::Mode::multipeer);
    cfg.node_counts = parse_node_counts(nodes);
    cfg.transport = transport == "tcp" ? bench::TransportKind::tcp_loopback : bench::TransportKind::sim;
    if (timeout_ms > 0) cfg.receive_timeout = std::chrono::milliseconds(timeout_ms);
    return run_bench(cfg, records_path);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
