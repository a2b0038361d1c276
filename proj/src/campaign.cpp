#include "fanet/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <sstream>
#include <thread>
#include <utility>

#include "fanet/rng.hpp"
#include "json.hpp"

namespace fanet {

namespace {

using nlohmann::json;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string{}; }

template <typename T>
T key_as(const json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ValidationError("invalid value for key '" + key + "'");
    }
}

void apply_radio(const json& obj, RadioParams& radio) {
    for (const auto& [key, value] : obj.items()) {
        if (key == "tx_power_dbm") radio.tx_power_dbm = key_as<double>(value, key);
        else if (key == "detect_threshold_dbm") radio.detect_threshold_dbm = key_as<double>(value, key);
        else if (key == "frequency_hz") radio.frequency_hz = key_as<double>(value, key);
        else if (key == "data_rate_bps") radio.data_rate_bps = key_as<double>(value, key);
        else if (key == "propagation_speed") radio.propagation_speed = key_as<double>(value, key);
        else throw ValidationError("unknown key 'radio." + key + "'");
    }
}

void apply_mac(const json& obj, MacParams& mac) {
    for (const auto& [key, value] : obj.items()) {
        if (key == "difs") mac.difs = key_as<double>(value, key);
        else if (key == "slot") mac.slot = key_as<double>(value, key);
        else if (key == "cw_min") mac.cw_min = key_as<int>(value, key);
        else if (key == "cw_max") mac.cw_max = key_as<int>(value, key);
        else if (key == "max_retries") mac.max_retries = key_as<int>(value, key);
        else if (key == "overhead_bytes") mac.overhead_bytes = key_as<int>(value, key);
        else if (key == "ack_timeout") mac.ack_timeout = key_as<double>(value, key);
        else throw ValidationError("unknown key 'mac." + key + "'");
    }
}

void apply_cpr(const json& obj, CprTdParams& cpr) {
    for (const auto& [key, value] : obj.items()) {
        if (key == "per_hop_budget") cpr.per_hop_budget = key_as<double>(value, key);
        else if (key == "max_route_retries") cpr.max_route_retries = key_as<int>(value, key);
        else throw ValidationError("unknown key 'cpr." + key + "'");
    }
}

FailureCondition condition_from(const json& value) {
    if (value.is_number_integer()) {
        const int c = value.get<int>();
        if (c == 1) return FailureCondition::None;
        if (c == 2) return FailureCondition::CentralPerGroup;
    } else if (value.is_string()) {
        const std::string s = value.get<std::string>();
        if (s == "none") return FailureCondition::None;
        if (s == "central_per_group") return FailureCondition::CentralPerGroup;
    }
    throw ValidationError("invalid value for key 'condition' (use 1, 2, \"none\", or "
                          "\"central_per_group\")");
}

}  // namespace

void validate_config(const ScenarioConfig& cfg) {
    const int n = cfg.node_count;
    bool square = false;
    if (n > 0 && n % 4 == 0) {
        const int per_group = n / 4;
        const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(per_group))));
        square = k * k == per_group;
    }
    if (!square)
        throw ValidationError("node_count must be 4*k^2, got " + std::to_string(n));
    if (cfg.packet_size <= 0) throw ValidationError("packet_size must be positive");
    if (cfg.generation_interval <= 0.0)
        throw ValidationError("generation_interval must be positive");
    if (cfg.n_packets < 0) throw ValidationError("n_packets must be non-negative");
    if (cfg.runs < 1) throw ValidationError("runs must be at least 1");
    if (cfg.expiry <= 0.0) throw ValidationError("expiry must be positive");
    if (cfg.t_first < 0.0) throw ValidationError("t_first must be non-negative");
    if (cfg.n_packets > 0) {
        const double last = cfg.t_first + (cfg.n_packets - 1) * cfg.generation_interval;
        if (last > cfg.t_last + 1e-9)
            throw ValidationError("n_packets does not fit in [t_first, t_last]");
    }
    const auto& b = cfg.phases.boundaries;
    if (b[0] != 0.0) throw ValidationError("phases must start at 0");
    for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i] <= b[i - 1]) throw ValidationError("phases must be strictly increasing");
}

namespace {

ScenarioConfig config_from_json(const json& root) {
    if (!root.is_object()) throw ValidationError("config root must be a JSON object");
    ScenarioConfig cfg;
    for (const auto& [key, value] : root.items()) {
        if (key == "node_count") cfg.node_count = key_as<int>(value, key);
        else if (key == "protocol") cfg.protocol = protocol_from_name(key_as<std::string>(value, key));
        else if (key == "condition") cfg.condition = condition_from(value);
        else if (key == "radio") apply_radio(value, cfg.radio);
        else if (key == "mac") apply_mac(value, cfg.mac);
        else if (key == "cpr") apply_cpr(value, cfg.cpr);
        else if (key == "phases") {
            const auto v = key_as<std::vector<double>>(value, key);
            if (v.size() != cfg.phases.boundaries.size())
                throw ValidationError("phases must list exactly 6 boundaries");
            std::copy(v.begin(), v.end(), cfg.phases.boundaries.begin());
        }
        else if (key == "packet_size") cfg.packet_size = key_as<int>(value, key);
        else if (key == "generation_interval") cfg.generation_interval = key_as<double>(value, key);
        else if (key == "t_first") cfg.t_first = key_as<double>(value, key);
        else if (key == "t_last") cfg.t_last = key_as<double>(value, key);
        else if (key == "n_packets") cfg.n_packets = key_as<int>(value, key);
        else if (key == "runs") cfg.runs = key_as<int>(value, key);
        else if (key == "base_seed") cfg.base_seed = key_as<std::uint64_t>(value, key);
        else if (key == "expiry") cfg.expiry = key_as<double>(value, key);
        else if (key == "common_random_numbers") cfg.common_random_numbers = key_as<bool>(value, key);
        else if (key == "oracle_knows_failures") cfg.oracle_knows_failures = key_as<bool>(value, key);
        else if (key == "out_dir") cfg.out_dir = key_as<std::string>(value, key);
        else throw ValidationError("unknown key '" + key + "'");
    }
    cfg.cpr.expiry = cfg.expiry;
    validate_config(cfg);
    return cfg;
}

std::vector<double> collect(const std::vector<RunResult>& runs,
                            const std::function<std::optional<double>(const RunResult&)>& f) {
    std::vector<double> xs;
    for (const RunResult& r : runs) {
        if (!r.error.empty()) continue;
        if (auto v = f(r)) xs.push_back(*v);
    }
    return xs;
}

struct PlotRow {
    std::string protocol;
    int nodes = 0;
    int condition = 0;
    int phase = 0;  // 0 for whole-run layouts
    std::string cells;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

}  // namespace

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::CprTd: return "cprtd";
        case Protocol::Aodv: return "aodv";
        case Protocol::Dsdv: return "dsdv";
    }
    return "?";
}

Protocol protocol_from_name(const std::string& name) {
    if (name == "cprtd") return Protocol::CprTd;
    if (name == "aodv") return Protocol::Aodv;
    if (name == "dsdv") return Protocol::Dsdv;
    throw ValidationError("invalid value for key 'protocol' (use cprtd, aodv, or dsdv), got '" +
                          name + "'");
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

ScenarioConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        std::string trimmed = text;
        trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
        root = trimmed.empty() ? json::object() : json::parse(trimmed);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(root);
}

std::vector<TrafficItem> make_traffic(const ScenarioConfig& cfg, std::uint64_t run_index,
                                      const std::set<int>& failed) {
    const std::uint64_t stream =
        cfg.common_random_numbers ? 0
                                  : 1000 + static_cast<std::uint64_t>(cfg.protocol);
    Rng rng(cfg.base_seed, run_index, RngPurpose::Traffic, stream);
    const auto n = static_cast<std::uint64_t>(cfg.node_count);
    auto alive = [&](int v) { return failed.count(v) == 0; };
    std::vector<TrafficItem> out;
    out.reserve(static_cast<std::size_t>(cfg.n_packets));
    for (int i = 0; i < cfg.n_packets; ++i) {
        TrafficItem item;
        item.t = cfg.t_first + i * cfg.generation_interval;
        do {
            item.src = static_cast<int>(rng.bounded(n));
        } while (!alive(item.src));
        do {
            item.dst = static_cast<int>(rng.bounded(n));
        } while (!alive(item.dst) || item.dst == item.src);
        out.push_back(item);
    }
    return out;
}

SharedScenario build_shared(const ScenarioConfig& cfg) {
    FormationSpec spec = build_scenario(cfg.node_count, cfg.phases, cfg.scenario);
    const EarthModel earth;
    FormationTrack track(spec, earth);
    std::set<int> failed;
    if (cfg.condition == FailureCondition::CentralPerGroup)
        for (int v : spec.central_nodes()) failed.insert(v);
    const double range = comm_range(cfg.radio);
    ConnectivityTimeline planned = build_timeline(
        track, range, cfg.oracle_knows_failures ? failed : std::set<int>{});
    return SharedScenario{std::move(spec), std::move(track), std::move(planned),
                          std::move(failed), range};
}

RunResult run_one(const ScenarioConfig& cfg, const SharedScenario& shared,
                  std::uint64_t run_index, bool trace) {
    RunResult r;
    r.run_index = static_cast<int>(run_index);
    r.seed = cfg.base_seed + run_index;
    try {
        Engine eng(shared.track, cfg.radio, cfg.mac, cfg.base_seed, run_index, shared.failed,
                   0.0);
        if (trace) eng.enable_trace();
        CprTdParams cpr = cfg.cpr;
        cpr.expiry = cfg.expiry;
        std::unique_ptr<RoutingAgent> agent;
        switch (cfg.protocol) {
            case Protocol::CprTd:
                agent = std::make_unique<CprTdAgent>(shared.planned, cpr);
                break;
            case Protocol::Aodv:
                agent = std::make_unique<AodvAgent>();
                break;
            case Protocol::Dsdv:
                agent = std::make_unique<DsdvAgent>();
                break;
        }
        eng.set_agent(agent.get());
        long pid = 0;
        for (const TrafficItem& item : make_traffic(cfg, run_index, shared.failed))
            eng.app_generate(item.t, item.src, item.dst, pid++, cfg.packet_size);
        eng.run(cfg.phases.sim_end());
        MetricsLedger& led = eng.ledger();
        led.finalize();

        r.generated = led.generated_count();
        r.delivered = led.count(PacketOutcome::Delivered);
        r.proactive_drop = led.count(PacketOutcome::ProactiveDrop);
        r.expired = led.count(PacketOutcome::Expired);
        r.lost = led.count(PacketOutcome::Lost);
        for (long id = 0; id < r.generated; ++id)
            r.duplicate_deliveries += led.packet(id).duplicate_deliveries;
        r.control_bytes = led.control_bytes_sent();
        r.data_bytes = led.data_bytes_sent();
        r.delivered_payload = led.delivered_payload_bytes();
        r.pdr = r.generated > 0 ? packet_delivery_ratio(led) : 0.0;
        r.oe = overhead_efficiency(led);
        try {
            r.avg_latency = average_latency(led);
        } catch (const NoDeliveries&) {
        }
        try {
            r.jitter = latency_jitter(led);
        } catch (const InsufficientSamples&) {
        }
        r.phase = metrics_by_phase(led, cfg.phases);
        if (trace) r.trace = eng.trace();
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

Stat stat_of(const std::vector<double>& xs) {
    Stat s;
    s.samples = static_cast<long>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return s;
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    return s;
}

CampaignResult run_campaign(const ScenarioConfig& cfg, const CampaignOptions& opts) {
    const SharedScenario shared = build_shared(cfg);
    CampaignResult res;
    res.config = cfg;
    res.runs.resize(static_cast<std::size_t>(cfg.runs));

    int workers = opts.workers > 0 ? opts.workers
                                   : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, cfg.runs));
    if (workers == 1) {
        for (int i = 0; i < cfg.runs; ++i)
            res.runs[static_cast<std::size_t>(i)] =
                run_one(cfg, shared, static_cast<std::uint64_t>(i), opts.trace);
    } else {
        std::vector<std::future<void>> slots;
        slots.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            slots.push_back(std::async(std::launch::async, [&, w] {
                for (int i = w; i < cfg.runs; i += workers)
                    res.runs[static_cast<std::size_t>(i)] =
                        run_one(cfg, shared, static_cast<std::uint64_t>(i), opts.trace);
            }));
        }
        for (auto& slot : slots) slot.get();
    }

    res.pdr = stat_of(collect(res.runs, [](const RunResult& r) { return r.pdr; }));
    res.oe = stat_of(collect(res.runs, [](const RunResult& r) { return r.oe; }));
    res.latency = stat_of(collect(res.runs, [](const RunResult& r) { return r.avg_latency; }));
    res.jitter = stat_of(collect(res.runs, [](const RunResult& r) { return r.jitter; }));
    for (std::size_t p = 0; p < res.phases.size(); ++p) {
        PhaseAggregate& agg = res.phases[p];
        auto bucket = [p](const RunResult& r) -> const PhaseBucket& { return r.phase[p]; };
        agg.generated = stat_of(collect(res.runs, [&](const RunResult& r) {
            return static_cast<double>(bucket(r).generated);
        }));
        agg.delivered = stat_of(collect(res.runs, [&](const RunResult& r) {
            return static_cast<double>(bucket(r).delivered);
        }));
        agg.pdr = stat_of(collect(res.runs, [&](const RunResult& r) { return bucket(r).pdr; }));
        agg.oe = stat_of(collect(res.runs, [&](const RunResult& r) { return bucket(r).oe; }));
        agg.latency = stat_of(
            collect(res.runs, [&](const RunResult& r) { return bucket(r).avg_latency; }));
        agg.jitter =
            stat_of(collect(res.runs, [&](const RunResult& r) { return bucket(r).jitter; }));
    }
    return res;
}

std::string runs_csv(const CampaignResult& result) {
    std::ostringstream out;
    out << "run,seed,generated,delivered,proactive_drop,expired,lost,duplicates,pdr,oe,"
           "avg_latency_s,jitter_s,control_bytes,data_bytes,delivered_payload_bytes,error\n";
    for (const RunResult& r : result.runs) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << r.run_index << ',' << r.seed << ',' << r.generated << ',' << r.delivered << ','
            << r.proactive_drop << ',' << r.expired << ',' << r.lost << ','
            << r.duplicate_deliveries << ',' << fmt(r.pdr) << ',' << fmt(r.oe) << ','
            << fmt(r.avg_latency) << ',' << fmt(r.jitter) << ',' << r.control_bytes << ','
            << r.data_bytes << ',' << r.delivered_payload << ',' << err << '\n';
    }
    return out.str();
}

std::string aggregate_csv(const CampaignResult& result) {
    std::ostringstream out;
    out << "metric,mean,stddev,samples\n";
    auto row = [&](const char* name, const Stat& s) {
        out << name << ',' << fmt(s.mean) << ',' << fmt(s.stddev) << ',' << s.samples << '\n';
    };
    row("pdr", result.pdr);
    row("oe", result.oe);
    row("avg_latency_s", result.latency);
    row("jitter_s", result.jitter);
    auto count_stat = [&](const char* name, auto getter) {
        row(name, stat_of(collect(result.runs, [&](const RunResult& r) {
                return std::optional<double>(static_cast<double>(getter(r)));
            })));
    };
    count_stat("delivered", [](const RunResult& r) { return r.delivered; });
    count_stat("proactive_drop", [](const RunResult& r) { return r.proactive_drop; });
    count_stat("expired", [](const RunResult& r) { return r.expired; });
    count_stat("lost", [](const RunResult& r) { return r.lost; });
    count_stat("control_bytes", [](const RunResult& r) { return r.control_bytes; });
    count_stat("data_bytes", [](const RunResult& r) { return r.data_bytes; });
    return out.str();
}

std::string by_phase_csv(const CampaignResult& result) {
    std::ostringstream out;
    out << "phase,generated_mean,delivered_mean,pdr_mean,pdr_stddev,pdr_samples,"
           "oe_mean,oe_stddev,oe_samples,latency_mean,latency_stddev,latency_samples,"
           "jitter_mean,jitter_stddev,jitter_samples\n";
    for (std::size_t p = 0; p < result.phases.size(); ++p) {
        const PhaseAggregate& a = result.phases[p];
        out << (p + 1) << ',' << fmt(a.generated.mean) << ',' << fmt(a.delivered.mean) << ','
            << fmt(a.pdr.mean) << ',' << fmt(a.pdr.stddev) << ',' << a.pdr.samples << ','
            << fmt(a.oe.mean) << ',' << fmt(a.oe.stddev) << ',' << a.oe.samples << ','
            << fmt(a.latency.mean) << ',' << fmt(a.latency.stddev) << ',' << a.latency.samples
            << ',' << fmt(a.jitter.mean) << ',' << fmt(a.jitter.stddev) << ','
            << a.jitter.samples << '\n';
    }
    return out.str();
}

std::string trajectories_csv(const SharedScenario& shared) {
    const EarthModel earth;
    std::ostringstream out;
    out << "t,node,east_m,north_m,up_m,lat_rad,lon_rad,alt_m\n";
    for (std::size_t s = 0; s < shared.track.sample_count(); ++s) {
        const double t = shared.track.sample_interval() * static_cast<double>(s);
        for (int node = 0; node < shared.track.node_count(); ++node) {
            const NodePosition pos = position_of(shared.spec, shared.track, node, t, earth);
            out << fmt(t) << ',' << node << ',' << fmt(pos.enu.x) << ',' << fmt(pos.enu.y)
                << ',' << fmt(pos.enu.z) << ',' << fmt(pos.geo.beta) << ','
                << fmt(pos.geo.lambda) << ',' << fmt(pos.geo.h) << '\n';
        }
    }
    return out.str();
}

std::string trace_csv(const RunResult& run) {
    std::ostringstream out;
    out << "t,node,kind,packet_id\n";
    for (const TraceRow& row : run.trace)
        out << fmt(row.t) << ',' << row.node << ',' << row.kind << ',' << row.packet_id << '\n';
    return out.str();
}

std::string plotdata_csv(const std::vector<CampaignResult>& results, PlotLayout layout) {
    std::vector<PlotRow> rows;
    for (const CampaignResult& res : results) {
        PlotRow base;
        base.protocol = protocol_name(res.config.protocol);
        base.nodes = res.config.node_count;
        base.condition = static_cast<int>(res.config.condition);
        if (layout == PlotLayout::by_phase) {
            for (std::size_t p = 0; p < res.phases.size(); ++p) {
                const PhaseAggregate& a = res.phases[p];
                PlotRow row = base;
                row.phase = static_cast<int>(p) + 1;
                std::ostringstream cells;
                cells << fmt(a.generated.mean) << ',' << fmt(a.delivered.mean) << ','
                      << fmt(a.pdr.mean) << ',' << fmt(a.pdr.stddev) << ',' << fmt(a.oe.mean)
                      << ',' << fmt(a.oe.stddev) << ',' << fmt(a.latency.mean) << ','
                      << fmt(a.latency.stddev);
                row.cells = cells.str();
                rows.push_back(std::move(row));
            }
        } else {
            PlotRow row = base;
            std::ostringstream cells;
            cells << fmt(res.pdr.mean) << ',' << fmt(res.pdr.stddev) << ',' << fmt(res.oe.mean)
                  << ',' << fmt(res.oe.stddev) << ',' << fmt(res.latency.mean) << ','
                  << fmt(res.latency.stddev) << ',' << fmt(res.jitter.mean) << ','
                  << fmt(res.jitter.stddev);
            row.cells = cells.str();
            rows.push_back(std::move(row));
        }
    }
    auto key_by_size = [](const PlotRow& r) {
        return std::make_tuple(r.protocol, r.condition, r.nodes, r.phase);
    };
    auto key_by_condition = [](const PlotRow& r) {
        return std::make_tuple(r.protocol, r.nodes, r.condition, r.phase);
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const PlotRow& a, const PlotRow& b) {
        return layout == PlotLayout::by_size ? key_by_size(a) < key_by_size(b)
                                             : key_by_condition(a) < key_by_condition(b);
    });

    std::ostringstream out;
    if (layout == PlotLayout::by_phase) {
        out << "protocol,nodes,condition,phase,generated_mean,delivered_mean,pdr_mean,"
               "pdr_stddev,oe_mean,oe_stddev,latency_mean,latency_stddev\n";
        for (const PlotRow& r : rows)
            out << r.protocol << ',' << r.nodes << ',' << r.condition << ',' << r.phase << ','
                << r.cells << '\n';
    } else {
        out << "protocol,nodes,condition,pdr_mean,pdr_stddev,oe_mean,oe_stddev,latency_mean,"
               "latency_stddev,jitter_mean,jitter_stddev\n";
        for (const PlotRow& r : rows)
            out << r.protocol << ',' << r.nodes << ',' << r.condition << ',' << r.cells << '\n';
    }
    return out.str();
}

std::vector<std::string> write_campaign_files(const CampaignResult& result,
                                              const SharedScenario& shared,
                                              const std::string& dir,
                                              bool with_trajectories) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(dir) / name).string();
        write_file(path, content);
        written.push_back(path);
    };
    emit("runs.csv", runs_csv(result));
    emit("aggregate.csv", aggregate_csv(result));
    emit("by_phase.csv", by_phase_csv(result));
    if (with_trajectories) emit("trajectories.csv", trajectories_csv(shared));
    for (const RunResult& r : result.runs)
        if (!r.trace.empty())
            emit("trace_" + std::to_string(r.run_index) + ".csv", trace_csv(r));
    return written;
}

}  // namespace fanet
