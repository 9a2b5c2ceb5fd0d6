#include <gtest/gtest.h>

#include "support.hpp"

using namespace replisim;
using replisim::testing::random_scenario;
using replisim::testing::random_scenario_json;
using replisim::testing::scenario_path;

namespace {

// One DC with `hosts` hosts of 4 cores; one client holding a replica on
// each listed host.
PlatformState util_platform(std::size_t n_dcs, int hosts) {
  PlatformState s;
  for (std::size_t i = 0; i < n_dcs; ++i) {
    DatacenterSpec dc;
    dc.host_count = hosts;
    dc.host.cores = 4;
    dc.host.storage_bytes = 100;
    s.datacenters.push_back(dc);
  }
  s.network.n = n_dcs;
  s.network.inter_bw.assign(n_dcs * n_dcs, 0.0);
  s.network.inter_cost.assign(n_dcs * n_dcs, 0.0);
  s.network.intra_bw.assign(n_dcs, 1.0);
  s.network.intra_cost.assign(n_dcs, 0.0);
  ClientSpec c;
  c.latencies.assign(n_dcs, 0.01);
  c.datum_size = 10;
  s.clients.push_back(c);
  validate_platform(s);
  build_runtime(s);
  return s;
}

VmId add_vm(PlatformState& s, std::size_t dc, std::size_t host, int cores, bool with_datum) {
  const VmId id = spawn_replica_vm(s, 0, dc, host, true);
  auto& vm = s.vm(id);
  s.host(dc, host).used_cores += cores - vm.cores;
  vm.cores = cores;
  if (with_datum)
    mark_routable(s, 0, id);
  else
    vm.hosted_data.clear();
  return id;
}

}  // namespace

TEST(LoadScenario, MinimalScenarioHasOneDatacenterAndOneClient) {
  const auto sc = load_scenario(scenario_path("minimal.json"));
  EXPECT_EQ(sc.platform.dc_count(), 1u);
  EXPECT_EQ(sc.platform.client_count(), 1u);
  EXPECT_EQ(sc.platform.hosts.at(0).size(), 1u);
}

TEST(LoadScenario, AvailabilityObjectiveAboveDatacenterCountIsRejected) {
  auto doc = nlohmann::json::parse(std::ifstream(scenario_path("two_dc.json")));
  doc["clients"][0]["avo"] = 3;
  try {
    scenario_from_json(doc);
    FAIL() << "expected a validation error";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("availability objective exceeds datacenter count"), std::string::npos);
  }
}

TEST(LoadScenario, BundledTwoDatacenterExampleHasSixVms) {
  const auto sc = load_scenario(scenario_path("two_dc.json"));
  ASSERT_EQ(sc.platform.dc_count(), 2u);
  EXPECT_EQ(sc.platform.hosts[0].size(), 2u);
  EXPECT_EQ(sc.platform.hosts[1].size(), 2u);
  for (const auto& h : sc.platform.hosts[0]) EXPECT_EQ(h.vms.size(), 2u);
  for (const auto& h : sc.platform.hosts[1]) EXPECT_EQ(h.vms.size(), 1u);
  EXPECT_EQ(sc.platform.vm_count(), 6u);
}

TEST(LoadScenario, ParseErrorsCarryLineContext) {
  try {
    parse_scenario("{\n  \"datacenters\": [\n    {,}\n  ]\n}");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadScenario, MissingKeyIsNamed) {
  auto doc = nlohmann::json::parse(std::ifstream(scenario_path("minimal.json")));
  doc["datacenters"][0]["host"].erase("power_max_w");
  try {
    scenario_from_json(doc);
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("power_max_w"), std::string::npos);
  }
}

TEST(LoadScenario, MissingFileIsAnError) { EXPECT_THROW(load_scenario("/nonexistent/x.json"), ScenarioError); }

TEST(LoadScenario, ViolatedInvariantsAreNamed) {
  const auto base = nlohmann::json::parse(std::ifstream(scenario_path("two_dc.json")));
  struct Case {
    std::function<void(nlohmann::json&)> edit;
    std::string fragment;
  };
  const std::vector<Case> cases = {
      {[](auto& d) { d["datacenters"][0]["carbon_intensity"] = -1; }, "carbon intensity"},
      {[](auto& d) { d["datacenters"][0]["host_count"] = 0; }, "host count"},
      {[](auto& d) { d["datacenters"][1]["host"]["power_idle_w"] = 1000; }, "power"},
      {[](auto& d) { d["network"]["inter_cost"][0][1] = 5e-11; }, "symmetric"},
      {[](auto& d) { d["network"]["inter_bw"][0][0] = 1; }, "diagonal"},
      {[](auto& d) { d["clients"][0]["latencies_s"][0] = 0; }, "latencies"},
      {[](auto& d) { d["clients"][0]["query_rate_hz"] = 0; }, "query rate"},
      {[](auto& d) { d["clients"][0]["rto_s"] = 0; }, "response time objective"},
  };
  for (const auto& c : cases) {
    auto doc = base;
    c.edit(doc);
    try {
      scenario_from_json(doc);
      ADD_FAILURE() << "accepted an invalid scenario (" << c.fragment << ")";
    } catch (const ScenarioError& e) {
      EXPECT_NE(std::string(e.what()).find(c.fragment), std::string::npos) << e.what();
    }
  }
}

TEST(LoadScenario, RoundTripIsIdentity) {
  for (const char* name : {"minimal.json", "two_dc.json", "steerable.json"}) {
    const auto a = load_scenario(scenario_path(name));
    const auto text = serialize_scenario(a);
    const auto b = parse_scenario(text);
    EXPECT_EQ(serialize_scenario(b), text) << name;
    EXPECT_EQ(scenario_hash(a), scenario_hash(b));
    EXPECT_EQ(a.platform.vm_count(), b.platform.vm_count());
  }
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_scenario(rng);
    const auto b = parse_scenario(serialize_scenario(a));
    ASSERT_EQ(serialize_scenario(a), serialize_scenario(b));
    ASSERT_EQ(a.platform.network.inter_bw, b.platform.network.inter_bw);
    ASSERT_EQ(a.platform.clients[0].latencies, b.platform.clients[0].latencies);
  }
}

TEST(LoadScenario, HashTracksContent) {
  auto doc = nlohmann::json::parse(std::ifstream(scenario_path("minimal.json")));
  const auto h1 = scenario_hash(scenario_from_json(doc));
  doc["clients"][0]["rto_s"] = 2.0;
  const auto h2 = scenario_hash(scenario_from_json(doc));
  EXPECT_EQ(h1.size(), 16u);
  EXPECT_NE(h1, h2);
}

TEST(AvgUtilization, IdlePlatformIsAllZero) {
  auto sc = load_scenario(scenario_path("two_dc.json"));
  place_all_initial_replicas(sc.platform);
  for (ClientId l = 0; l < 2; ++l)
    for (double u : avg_utilization(sc.platform, l, 0.0)) EXPECT_EQ(u, 0.0);
}

TEST(AvgUtilization, HalfBusyHostWithReplica) {
  auto s = util_platform(2, 1);
  const auto a = add_vm(s, 0, 0, 1, true);
  const auto b = add_vm(s, 0, 0, 1, false);
  s.vm(a).busy_until = 5.0;
  s.vm(b).busy_until = 5.0;
  const auto u = avg_utilization(s, 0, 1.0);
  EXPECT_DOUBLE_EQ(u[0], 0.5);
  EXPECT_DOUBLE_EQ(u[1], 0.0);
}

TEST(AvgUtilization, AveragesOverHostsHoldingTheDatum) {
  auto s = util_platform(1, 2);
  const auto a = add_vm(s, 0, 0, 4, true);
  add_vm(s, 0, 1, 1, true);
  s.vm(a).busy_until = 3.0;
  EXPECT_DOUBLE_EQ(avg_utilization(s, 0, 1.0)[0], 0.5);
  EXPECT_DOUBLE_EQ(avg_utilization(s, 0, 3.0)[0], 0.0);  // busy_until is exclusive
}

TEST(AvgUtilization, UnknownClientIsRejected) {
  auto s = util_platform(1, 1);
  EXPECT_THROW(avg_utilization(s, 3, 0.0), std::out_of_range);
  EXPECT_THROW(global_replication_factor(s, 1), std::out_of_range);
}

TEST(AvgUtilization, MatchesBruteForceRecount) {
  Rng rng(11);
  std::uniform_int_distribution<int> cores(1, 2), coin(0, 1);
  std::uniform_real_distribution<double> busy(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = util_platform(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (int k = 0; k < 2; ++k) {
          const auto id = add_vm(s, i, j, cores(rng), coin(rng) == 1);
          s.vm(id).busy_until = busy(rng);
        }
    const double t = busy(rng);
    const auto got = avg_utilization(s, 0, t);
    for (std::size_t i = 0; i < 3; ++i) {
      double sum = 0;
      int hosts = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        bool holds = false;
        int busy_cores_here = 0;
        for (const auto& vm : s.hosts[i][j].vms) {
          if (vm.routable && std::count(vm.hosted_data.begin(), vm.hosted_data.end(), 0u)) holds = true;
          if (vm.busy_until > t) busy_cores_here += vm.cores;
        }
        if (holds) {
          sum += busy_cores_here / 4.0;
          ++hosts;
        }
      }
      const double expect = hosts ? sum / hosts : 0.0;
      ASSERT_NEAR(got[i], expect, 1e-15);
      ASSERT_GE(got[i], 0.0);
      ASSERT_LE(got[i], 1.0);
    }
  }
}

TEST(FreeCapacity, FullHostsGiveEmptyList) {
  auto s = util_platform(1, 2);
  add_vm(s, 0, 0, 4, true);
  add_vm(s, 0, 1, 4, false);
  EXPECT_TRUE(free_capacity(s, 0, 1).empty());
}

TEST(FreeCapacity, ExactStorageFitQualifies) {
  auto s = util_platform(1, 1);
  add_vm(s, 0, 0, 3, true);  // one core left, 90 bytes left
  EXPECT_EQ(free_capacity(s, 0, 90), std::vector<std::size_t>{0});
  EXPECT_TRUE(free_capacity(s, 0, 90.0000001).empty());
}

TEST(FreeCapacity, MatchesExhaustiveScan) {
  Rng rng(3);
  std::uniform_int_distribution<int> cores(1, 3), count(0, 3);
  std::uniform_real_distribution<double> sz(0.0, 120.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = util_platform(1, 4);
    for (std::size_t j = 0; j < 4; ++j) {
      const int k = count(rng);
      for (int v = 0; v < k; ++v) {
        const int c = cores(rng);
        if (s.host(0, j).used_cores + c > 4 || s.host(0, j).used_storage + 10 > 100) break;
        add_vm(s, 0, j, c, true);
      }
    }
    const double bytes = sz(rng);
    std::vector<std::size_t> expect;
    for (std::size_t j = 0; j < 4; ++j) {
      int used = 0;
      for (const auto& vm : s.hosts[0][j].vms) used += vm.cores;
      const double stored = 10.0 * static_cast<double>(s.hosts[0][j].vms.size());
      if (4 - used >= 1 && 100 - stored >= bytes) expect.push_back(j);
    }
    ASSERT_EQ(free_capacity(s, 0, bytes), expect);
  }
}

TEST(ReplicationFactor, InitialPlacementCreatesExactlyAvo) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto sc = random_scenario(rng);
    place_all_initial_replicas(sc.platform);
    for (ClientId l = 0; l < sc.platform.client_count(); ++l)
      EXPECT_EQ(global_replication_factor(sc.platform, l), sc.platform.clients[l].sla.availability_objective);
  }
}

TEST(ReplicationFactor, AvoThreeGivesThree) {
  Rng rng(9);
  auto doc = random_scenario_json(rng);
  while (doc["datacenters"].size() < 3) doc = random_scenario_json(rng);
  doc["clients"][0]["avo"] = 3;
  auto sc = scenario_from_json(doc);
  place_all_initial_replicas(sc.platform);
  EXPECT_EQ(global_replication_factor(sc.platform, 0), 3);
}

TEST(ReplicationFactor, DynamicReplicationAddsOneAndMatchesLocations) {
  auto sc = load_scenario(scenario_path("two_dc.json"));
  auto& s = sc.platform;
  place_all_initial_replicas(s);
  const int before = global_replication_factor(s, 0);
  const auto check = validate_action(s, Action::replicate(1), 0, 0.0);
  ASSERT_TRUE(check.valid);
  const auto vm = apply_decision(s, *check.decision);
  EXPECT_EQ(global_replication_factor(s, 0), before);  // not routable yet
  complete_replication(s, 0, vm);
  EXPECT_EQ(global_replication_factor(s, 0), before + 1);
  for (ClientId l = 0; l < s.client_count(); ++l)
    EXPECT_EQ(static_cast<std::size_t>(global_replication_factor(s, l)), s.replicas[l].locations.size());
  EXPECT_FALSE(check_runtime_invariants(s).has_value());
}

TEST(RuntimeInvariants, DetectsCapacityAndAvailabilityViolations) {
  auto sc = load_scenario(scenario_path("two_dc.json"));
  auto& s = sc.platform;
  place_all_initial_replicas(s);
  EXPECT_FALSE(check_runtime_invariants(s).has_value());

  auto over = s;
  over.hosts[0][0].vms[0].cores = 40;
  over.hosts[0][0].used_cores += 39;
  EXPECT_TRUE(check_runtime_invariants(over).has_value());

  auto lost = s;
  lost.replicas[1].per_dc.assign(2, 0);
  lost.replicas[1].locations.clear();
  const auto v = check_runtime_invariants(lost);
  ASSERT_TRUE(v.has_value());
  EXPECT_NE(v->find("availability"), std::string::npos);
}
