#include "tdm/bench.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <latch>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tdm/endpoint.hpp"
#include "tdm/schedule.hpp"
#include "tdm/sim_network.hpp"
#include "tdm/tcp_transport.hpp"

namespace tdm::bench {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t run_seed(std::uint64_t seed, std::uint32_t node_count, std::uint32_t run_index) {
  std::uint64_t state = seed ^ (std::uint64_t{node_count} << 32) ^ run_index;
  return splitmix64(state);
}

SlotSchedule schedule_for(Mode mode, std::uint32_t n) {
  return mode == Mode::pairwise ? round_robin_schedule(n) : clique_schedule(n);
}

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::pairwise ? "pairwise" : "multipeer"; }

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "pairwise") return Mode::pairwise;
  if (text == "multipeer") return Mode::multipeer;
  return std::nullopt;
}

void validate(const Config& cfg) {
  if (cfg.modes.empty()) throw std::invalid_argument("no benchmark mode selected");
  if (cfg.node_counts.empty()) throw std::invalid_argument("node count list is empty");
  for (auto n : cfg.node_counts) {
    if (n < 2) throw std::invalid_argument("node count " + std::to_string(n) + " is below 2");
  }
  if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
}

Bytes node_payload(std::uint64_t seed, NodeId node, std::size_t size) {
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * node.value());
  Bytes out(size);
  for (std::size_t i = 0; i < size; i += 8) {
    const auto word = splitmix64(state);
    for (std::size_t b = 0; b < 8 && i + b < size; ++b) out[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
  }
  return out;
}

RunResult run_once(Mode mode, std::uint32_t n, TransportKind transport, std::size_t payload_bytes, std::uint64_t seed,
                   std::optional<std::chrono::milliseconds> receive_timeout) {
  const auto schedule = schedule_for(mode, n);

  std::shared_ptr<SimNetwork> network;
  std::vector<std::unique_ptr<Transport>> transports;
  std::vector<TcpTransport*> tcp;
  if (transport == TransportKind::sim) {
    auto mesh = sim_create(n, SimOptions{InterleavedDelivery{seed}});
    network = mesh.network;
    for (auto& h : mesh.handles) transports.push_back(std::move(h));
  } else {
    for (std::uint32_t i = 1; i <= n; ++i) {
      auto t = std::make_unique<TcpTransport>(NodeId(i), TcpOptions{});
      tcp.push_back(t.get());
      transports.push_back(std::move(t));
    }
    for (auto* a : tcp) {
      for (auto* b : tcp) {
        if (a != b) a->set_peer(b->self(), b->local_address());
      }
    }
    // connections are established outside the timed section
    for (const auto& plan : schedule.slots) {
      for (const auto& [owner, peers] : plan.peer_lists) {
        for (auto peer : peers) tcp[owner.value() - 1]->connect(peer);
      }
    }
  }

  std::vector<Endpoint> endpoints;
  endpoints.reserve(n);
  std::vector<Transport*> raw;
  for (std::uint32_t i = 0; i < n; ++i) {
    raw.push_back(transports[i].get());
    endpoints.emplace_back(NodeId(i + 1), std::move(transports[i]), EndpointOptions{receive_timeout, 0});
  }

  RunResult result;
  result.elapsed_seconds.assign(n, 0.0);
  std::vector<std::map<std::uint64_t, std::vector<Bytes>>> per_slot(n);
  std::mutex error_mu;
  std::once_flag abort_once;
  auto abort_all = [&] {
    // unblock every node still waiting on the failed one
    if (network) {
      for (std::uint32_t i = 1; i <= n; ++i) network->close(NodeId(i));
    } else {
      for (auto* t : raw) t->close();
    }
  };

  std::latch start(n + 1);
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      const auto payload = node_payload(seed, NodeId(i + 1), payload_bytes);
      const auto exchange_mode = mode == Mode::pairwise ? ExchangeMode::pairwise : ExchangeMode::multipeer;
      start.arrive_and_wait();
      try {
        const auto t0 = std::chrono::steady_clock::now();
        per_slot[i] = run_schedule(endpoints[i], schedule, [&](std::uint64_t) { return payload; }, exchange_mode);
        const auto t1 = std::chrono::steady_clock::now();
        result.elapsed_seconds[i] = std::chrono::duration<double>(t1 - t0).count();
      } catch (const std::exception& e) {
        {
          std::lock_guard lock(error_mu);
          if (!result.error) result.error = e.what();
        }
        std::call_once(abort_once, abort_all);
      }
    });
  }
  start.arrive_and_wait();
  for (auto& t : threads) t.join();
  for (auto& e : endpoints) e.transport().close();

  result.received.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto& [slot, payloads] : per_slot[i]) {
      const auto& peers = *schedule.slots[slot].peers(NodeId(i + 1));
      for (std::size_t k = 0; k < peers.size(); ++k) result.received[i][peers[k]] = payloads[k];
    }
  }
  return result;
}

std::string verify_complete(const RunResult& run, std::uint64_t seed, std::size_t payload_bytes) {
  if (run.error) return *run.error;
  const auto n = static_cast<std::uint32_t>(run.received.size());
  for (std::uint32_t i = 1; i <= n; ++i) {
    const auto& got = run.received[i - 1];
    if (got.size() != n - 1)
      return "node " + std::to_string(i) + " holds " + std::to_string(got.size()) + " of " + std::to_string(n - 1) +
             " peer payloads";
    for (std::uint32_t j = 1; j <= n; ++j) {
      if (j == i) continue;
      auto it = got.find(NodeId(j));
      if (it == got.end()) return "node " + std::to_string(i) + " is missing node " + std::to_string(j);
      if (it->second != node_payload(seed, NodeId(j), payload_bytes))
        return "node " + std::to_string(i) + " holds a wrong payload for node " + std::to_string(j);
    }
  }
  return {};
}

Outcome run_benchmark(const Config& cfg, const Progress& progress) {
  validate(cfg);
  Outcome outcome;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<ReceivedSet>> first_mode_sets;

  for (auto mode : cfg.modes) {
    for (auto n : cfg.node_counts) {
      for (std::uint32_t run = 0; run < cfg.repetitions; ++run) {
        if (progress) progress(mode, n, run);
        const auto seed = run_seed(cfg.seed, n, run);
        RunResult result;
        std::string failure;
        try {
          result = run_once(mode, n, cfg.transport, cfg.payload_bytes, seed, cfg.receive_timeout);
          failure = verify_complete(result, seed, cfg.payload_bytes);
        } catch (const std::exception& e) {
          failure = e.what();
        }

        // both modes must leave every node holding the same (peer, payload) set
        if (failure.empty()) {
          auto [it, inserted] = first_mode_sets.try_emplace({n, run}, result.received);
          if (!inserted && it->second != result.received) failure = "pairwise and multipeer results differ";
        }

        const bool failed = !failure.empty();
        if (failed) outcome.failures.push_back({mode, n, run, failure});
        for (std::uint32_t i = 0; i < n; ++i) {
          const double elapsed = i < result.elapsed_seconds.size() ? result.elapsed_seconds[i] : 0.0;
          outcome.records.push_back({mode, n, run, i + 1, elapsed, failed});
        }
      }
    }
  }
  return outcome;
}

Aggregate aggregate(std::span<const Record> records) {
  std::map<std::pair<Mode, std::uint32_t>, std::vector<double>> groups;
  Aggregate out;
  for (const auto& r : records) {
    auto& samples = groups[{r.mode, r.node_count}];
    if (r.failed) {
      ++out.failed_samples[{r.mode, r.node_count}];
    } else {
      samples.push_back(r.elapsed_seconds);
    }
  }
  for (auto& [key, samples] : groups) {
    if (samples.empty()) {
      out.skipped_groups.push_back(key);
      continue;
    }
    // fixed summation order keeps the result independent of record order
    std::sort(samples.begin(), samples.end());
    const double count = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / count;
    double ss = 0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double stddev = samples.size() > 1 ? std::sqrt(ss / (count - 1)) : 0.0;
    out.rows.push_back({key.first, key.second, mean, stddev, samples.size()});
  }
  return out;
}

QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_quadratic: x and y differ in length");
  if (std::set<double>(x.begin(), x.end()).size() < 3)
    throw InsufficientPoints("quadratic fit needs at least 3 distinct node counts");

  const auto m = static_cast<Eigen::Index>(x.size());
  // scale x into [-1, 1] so the n^2 column does not swamp the others
  double scale = 0;
  for (double v : x) scale = std::max(scale, std::abs(v));

  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = x[i] / scale;
    a(i, 0) = t * t;
    a(i, 1) = t;
    a(i, 2) = 1.0;
    b(i) = y[i];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);

  QuadraticFit fit;
  fit.c2 = coef(0) / (scale * scale);
  fit.c1 = coef(1) / scale;
  fit.c0 = coef(2);

  const double mean = b.mean();
  double ss_res = 0, ss_tot = 0;
  fit.residuals.reserve(x.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = y[i] - (a.row(i) * coef)(0);
    fit.residuals.push_back(r);
    ss_res += r * r;
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.r_squared = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : (ss_res == 0 ? 1.0 : 0.0);
  return fit;
}

QuadraticFit fit_quadratic(std::span<const AggregateRow> rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.node_count);
    y.push_back(r.mean_seconds);
  }
  return fit_quadratic(x, y);
}

void emit_results(std::span<const AggregateRow> rows, const std::map<Mode, QuadraticFit>& fits,
                  const std::string& path) {
  {
    std::ofstream csv(path);
    if (!csv) throw IoError("cannot write " + path);
    csv << "mode,nodeCount,meanElapsed,stddev,sampleCount\n";
    csv << std::setprecision(9);
    for (const auto& r : rows)
      csv << to_string(r.mode) << ',' << r.node_count << ',' << r.mean_seconds << ',' << r.stddev_seconds << ','
          << r.sample_count << '\n';
    if (!csv) throw IoError("write failed: " + path);
  }

  const auto summary_path = path + ".summary.txt";
  std::ofstream summary(summary_path);
  if (!summary) throw IoError("cannot write " + summary_path);
  summary << std::setprecision(6);
  for (const auto& [mode, fit] : fits) {
    summary << to_string(mode) << ": mean ~ " << fit.c2 << "*n^2 + " << fit.c1 << "*n + " << fit.c0
            << "  (R^2 = " << fit.r_squared << ")\n";
  }

  std::map<std::uint32_t, std::map<Mode, double>> by_count;
  for (const auto& r : rows) by_count[r.node_count][r.mode] = r.mean_seconds;
  bool header = false;
  for (const auto& [n, means] : by_count) {
    if (!means.contains(Mode::pairwise) || !means.contains(Mode::multipeer)) continue;
    if (!header) {
      summary << "\nnodeCount  pairwise/multipeer\n";
      header = true;
    }
    const double multipeer = means.at(Mode::multipeer);
    summary << std::setw(9) << n << "  ";
    if (multipeer > 0) {
      summary << means.at(Mode::pairwise) / multipeer << '\n';
    } else {
      summary << "n/a\n";
    }
  }
  if (!summary) throw IoError("write failed: " + summary_path);
}

void emit_records(std::span<const Record> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "mode,nodeCount,runIndex,nodeId,elapsed,failed\n" << std::setprecision(9);
  for (const auto& r : records)
    out << to_string(r.mode) << ',' << r.node_count << ',' << r.run_index << ',' << r.node_id << ','
        << r.elapsed_seconds << ',' << (r.failed ? 1 : 0) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace tdm::bench
