#pragma once

// Monte Carlo campaign orchestration: configuration ingestion (JSON with
// defaults and named validation errors), seeded replica execution (optionally
// concurrent, with results independent of the worker count), CSV persistence,
// and plot-ready summary tables.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fanet/baselines.hpp"
#include "fanet/connectivity.hpp"
#include "fanet/metrics.hpp"
#include "fanet/mobility.hpp"
#include "fanet/netsim.hpp"
#include "fanet/protocol.hpp"

namespace fanet {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : ConfigError {
    using ConfigError::ConfigError;
};
struct ValidationError : ConfigError {
    using ConfigError::ConfigError;
};

enum class Protocol { CprTd, Aodv, Dsdv };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);  // throws ValidationError

enum class FailureCondition : int {
    None = 1,            // every node healthy
    CentralPerGroup = 2  // the lattice-centre node of each group is dead from t=0
};

struct ScenarioConfig {
    int node_count = 36;
    Protocol protocol = Protocol::CprTd;
    FailureCondition condition = FailureCondition::None;
    RadioParams radio;
    MacParams mac;
    ScenarioPhases phases;
    ScenarioParams scenario;
    CprTdParams cpr;              // cpr.expiry mirrors `expiry` after loading
    int packet_size = 1000;       // application payload, bytes
    double generation_interval = 0.1;  // s between packets
    double t_first = 1.0;         // first generation instant, s
    double t_last = 99.9;         // no generation after this, s
    int n_packets = 990;
    int runs = 100;
    std::uint64_t base_seed = 1;
    double expiry = 30.0;         // packet lifetime, s
    bool common_random_numbers = true;   // same traffic across protocols
    bool oracle_knows_failures = false;  // feed failures into the planned timeline
    std::string out_dir = "results";
};

// Parse a JSON config file; absent keys keep their defaults. Throws
// ParseError on malformed JSON, ValidationError naming the offending key.
ScenarioConfig load_config(const std::string& path);
// Same, from an in-memory JSON string.
ScenarioConfig config_from_json_text(const std::string& text);
// Consistency checks alone (node_count shape, traffic window, phases, ...);
// throws ValidationError naming the offending key. Load functions call this.
void validate_config(const ScenarioConfig& cfg);

// One application packet to inject.
struct TrafficItem {
    double t = 0.0;
    int src = 0;
    int dst = 0;
};

// The deterministic per-run traffic schedule: n_packets items at t_first,
// t_first + interval, ...; endpoints uniform among live nodes, src != dst.
// With common random numbers the schedule ignores cfg.protocol.
std::vector<TrafficItem> make_traffic(const ScenarioConfig& cfg, std::uint64_t run_index,
                                      const std::set<int>& failed);

// Immutable per-campaign state shared by all replicas.
struct SharedScenario {
    FormationSpec spec;
    FormationTrack track;
    ConnectivityTimeline planned;  // timeline handed to the trajectory-driven agent
    std::set<int> failed;          // dead from t=0 under the failure condition
    double range = 0.0;
};
SharedScenario build_shared(const ScenarioConfig& cfg);

struct RunResult {
    int run_index = 0;
    std::uint64_t seed = 0;
    long generated = 0;
    long delivered = 0;
    long proactive_drop = 0;
    long expired = 0;
    long lost = 0;
    long duplicate_deliveries = 0;
    long control_bytes = 0;
    long data_bytes = 0;
    long delivered_payload = 0;
    double pdr = 0.0;
    std::optional<double> oe;
    std::optional<double> avg_latency;
    std::optional<double> jitter;
    std::array<PhaseBucket, 5> phase{};
    std::vector<TraceRow> trace;  // filled only when tracing is on
    std::string error;            // nonempty if the replica threw
};

RunResult run_one(const ScenarioConfig& cfg, const SharedScenario& shared,
                  std::uint64_t run_index, bool trace = false);

// Mean and sample standard deviation over the runs where a metric is defined.
struct Stat {
    double mean = 0.0;
    double stddev = 0.0;
    long samples = 0;
};
Stat stat_of(const std::vector<double>& xs);

struct PhaseAggregate {
    Stat generated, delivered, pdr, oe, latency, jitter;
};

struct CampaignResult {
    ScenarioConfig config;
    std::vector<RunResult> runs;
    Stat pdr, oe, latency, jitter;
    std::array<PhaseAggregate, 5> phases{};
};

struct CampaignOptions {
    int workers = 0;  // 0: hardware concurrency
    bool trace = false;
};

// Runs cfg.runs replicas (run i seeded with base_seed + i), aggregates, and
// returns per-run plus summary results. Replica errors are captured in
// RunResult::error without aborting the campaign.
CampaignResult run_campaign(const ScenarioConfig& cfg, const CampaignOptions& opts = {});

// CSV renderings (documented header row; doubles printed with %.17g so
// output is byte-stable; undefined metrics are empty cells).
std::string runs_csv(const CampaignResult& result);
std::string aggregate_csv(const CampaignResult& result);
std::string by_phase_csv(const CampaignResult& result);
std::string trajectories_csv(const SharedScenario& shared);
std::string trace_csv(const RunResult& run);

enum class PlotLayout { by_size, by_phase, by_condition };
// One summary table across campaigns: rows keyed by protocol / node count /
// condition (and phase for the by_phase layout).
std::string plotdata_csv(const std::vector<CampaignResult>& results, PlotLayout layout);

// Writes runs/aggregate/by_phase (and per-run traces when present) under dir,
// creating it if needed. Returns the list of files written.
std::vector<std::string> write_campaign_files(const CampaignResult& result,
                                              const SharedScenario& shared,
                                              const std::string& dir,
                                              bool with_trajectories = true);

}  // namespace fanet
