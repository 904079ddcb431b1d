#include <doctest.h>

#include <set>
#include <thread>

#include "tdm/sim_network.hpp"

using namespace tdm;
using namespace std::chrono_literals;

namespace {

WireMessage msg(std::uint64_t slot, std::uint32_t from, std::string_view text = "") {
  return WireMessage{slot, NodeId(from), to_bytes(text)};
}

}  // namespace

TEST_CASE("fifo delivery") {
  auto mesh = sim_create(2);
  mesh.handles[0]->send(NodeId(2), msg(0, 1, "m"));
  CHECK(mesh.handles[1]->receive() == msg(0, 1, "m"));
  CHECK(mesh.network->counters(NodeId(1)).sends == 1);
  CHECK(mesh.network->counters(NodeId(2)).receive_calls == 1);

  auto three = sim_create(3);
  three.handles[2]->send(NodeId(1), msg(0, 3));
  three.handles[1]->send(NodeId(1), msg(0, 2));
  three.handles[2]->send(NodeId(1), msg(1, 3));
  CHECK(three.handles[0]->receive().sender == NodeId(3));
  CHECK(three.handles[0]->receive().sender == NodeId(2));
  CHECK(three.handles[0]->receive() == msg(1, 3));
}

TEST_CASE("scripted delivery overrides arrival order") {
  ScriptedDelivery script;
  script.order[NodeId(2)] = {NodeId(3), NodeId(1)};
  auto mesh = sim_create(3, SimOptions{script});
  mesh.handles[0]->send(NodeId(2), msg(0, 1, "A"));
  mesh.handles[2]->send(NodeId(2), msg(0, 3, "C"));
  CHECK(mesh.handles[1]->receive().sender == NodeId(3));
  CHECK(mesh.handles[1]->receive().sender == NodeId(1));

  // past the end of the script: fifo
  mesh.handles[2]->send(NodeId(2), msg(1, 3));
  mesh.handles[0]->send(NodeId(2), msg(1, 1));
  CHECK(mesh.handles[1]->receive().sender == NodeId(3));
}

TEST_CASE("scripted receive waits for the scripted sender") {
  ScriptedDelivery script;
  script.order[NodeId(1)] = {NodeId(3)};
  auto mesh = sim_create(3, SimOptions{script});
  mesh.handles[1]->send(NodeId(1), msg(0, 2));
  CHECK_FALSE(mesh.handles[0]->receive_for(20ms).has_value());
  std::thread late([&] { mesh.handles[2]->send(NodeId(1), msg(0, 3)); });
  CHECK(mesh.handles[0]->receive().sender == NodeId(3));
  late.join();
}

TEST_CASE("interleaved delivery keeps per-sender order") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto mesh = sim_create(4, SimOptions{InterleavedDelivery{seed}});
    for (std::uint64_t k = 0; k < 5; ++k)
      for (std::uint32_t s = 2; s <= 4; ++s) mesh.handles[s - 1]->send(NodeId(1), msg(k, s));
    std::map<std::uint32_t, std::uint64_t> next;
    for (int i = 0; i < 15; ++i) {
      const auto m = mesh.handles[0]->receive();
      CHECK(m.time_slot == next[m.sender.value()]++);
    }
  }
}

TEST_CASE("interleaved delivery is deterministic for a seed and varies across seeds") {
  auto run = [](std::uint64_t seed) {
    auto mesh = sim_create(5, SimOptions{InterleavedDelivery{seed}});
    for (std::uint64_t k = 0; k < 4; ++k)
      for (std::uint32_t s = 2; s <= 5; ++s) mesh.handles[s - 1]->send(NodeId(1), msg(k, s));
    for (int i = 0; i < 16; ++i) mesh.handles[0]->receive();
    return mesh.network->delivery_log(NodeId(1));
  };
  CHECK(run(42) == run(42));
  std::set<std::vector<std::pair<NodeId, std::uint64_t>>> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) distinct.insert(run(seed));
  CHECK(distinct.size() > 1);
}

TEST_CASE("blocked receive wakes on a send from any peer") {
  auto mesh = sim_create(3);
  std::thread sender([&] {
    std::this_thread::sleep_for(10ms);
    mesh.handles[2]->send(NodeId(1), msg(4, 3, "x"));
  });
  CHECK(mesh.handles[0]->receive() == msg(4, 3, "x"));
  sender.join();
}

TEST_CASE("receive_for times out on an idle inbox") {
  auto mesh = sim_create(2);
  CHECK_FALSE(mesh.handles[0]->receive_for(10ms).has_value());
}

TEST_CASE("closing") {
  auto mesh = sim_create(3);
  mesh.handles[1]->send(NodeId(1), msg(0, 2));
  mesh.handles[1]->close();
  mesh.handles[2]->close();
  // queued input is still delivered, then the inbox reports closure
  CHECK(mesh.handles[0]->receive().sender == NodeId(2));
  CHECK_THROWS_AS(mesh.handles[0]->receive(), TransportClosed);
  CHECK_THROWS_AS(mesh.handles[0]->send(NodeId(2), msg(0, 1)), TransportClosed);
  CHECK_THROWS_AS(mesh.handles[1]->send(NodeId(1), msg(0, 2)), TransportClosed);
}

TEST_CASE("frame limit applies to simulated sends") {
  SimOptions opts;
  opts.max_body_bytes = 20;
  auto mesh = sim_create(2, opts);
  CHECK_THROWS_AS(mesh.handles[0]->send(NodeId(2), WireMessage{0, NodeId(1), Bytes(9)}), FrameTooLarge);
  CHECK(mesh.network->pending(NodeId(2)) == 0);
  CHECK_NOTHROW(mesh.handles[0]->send(NodeId(2), WireMessage{0, NodeId(1), Bytes(8)}));
}
