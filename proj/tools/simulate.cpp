// Command-line front end: loads a JSON scenario configuration, runs one
// Monte Carlo campaign per requested (protocol, node count, condition)
// combination, and writes CSV results plus plot-ready summary tables.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fanet/campaign.hpp"

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Formation-flight ad hoc network simulator"};
    std::string config_path;
    std::vector<std::string> protocols;
    std::vector<int> node_counts;
    std::vector<int> conditions;
    int runs = -1;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool trace = false;
    int workers = 0;

    app.add_option("--config", config_path, "JSON configuration file (defaults when omitted)");
    app.add_option("--protocol", protocols, "Protocols to run: cprtd, aodv, dsdv")
        ->delimiter(',');
    app.add_option("--nodes", node_counts, "Node counts (each must be 4*k^2, e.g. 36,100,196)")
        ->delimiter(',');
    app.add_option("--condition", conditions, "Failure conditions: 1 (none), 2 (central node per group)")
        ->delimiter(',');
    app.add_option("--runs", runs, "Monte Carlo replicas per campaign");
    auto* seed_opt = app.add_option("--seed", seed, "Base seed (run i uses base seed + i)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_flag("--trace", trace, "Write per-run event traces");
    app.add_option("--workers", workers, "Concurrent replicas (0 = hardware threads)");
    CLI11_PARSE(app, argc, argv);

    try {
        fanet::ScenarioConfig base = config_path.empty() ? fanet::ScenarioConfig{}
                                                         : fanet::load_config(config_path);
        if (runs >= 0) base.runs = runs;
        if (seed_opt->count() > 0) base.base_seed = seed;
        if (!out_dir.empty()) base.out_dir = out_dir;

        std::vector<fanet::Protocol> protos;
        if (protocols.empty()) {
            protos.push_back(base.protocol);
        } else {
            for (const std::string& p : protocols) protos.push_back(fanet::protocol_from_name(p));
        }
        if (node_counts.empty()) node_counts.push_back(base.node_count);
        std::vector<fanet::FailureCondition> conds;
        if (conditions.empty()) {
            conds.push_back(base.condition);
        } else {
            for (int c : conditions) {
                if (c == 1) conds.push_back(fanet::FailureCondition::None);
                else if (c == 2) conds.push_back(fanet::FailureCondition::CentralPerGroup);
                else throw fanet::ValidationError("invalid --condition (use 1 or 2), got " +
                                                  std::to_string(c));
            }
        }

        fanet::CampaignOptions opts;
        opts.workers = workers;
        opts.trace = trace;

        std::vector<fanet::CampaignResult> all;
        for (fanet::Protocol proto : protos) {
            for (int nodes : node_counts) {
                for (fanet::FailureCondition cond : conds) {
                    fanet::ScenarioConfig cfg = base;
                    cfg.protocol = proto;
                    cfg.node_count = nodes;
                    cfg.condition = cond;
                    fanet::validate_config(cfg);  // overrides can invalidate
                    const std::string label = std::string(fanet::protocol_name(proto)) + "_n" +
                                              std::to_string(nodes) + "_c" +
                                              std::to_string(static_cast<int>(cond));
                    std::cerr << "campaign " << label << ": " << cfg.runs << " runs..."
                              << std::endl;
                    fanet::SharedScenario shared = fanet::build_shared(cfg);
                    fanet::CampaignResult result = fanet::run_campaign(cfg, opts);
                    const std::filesystem::path dir =
                        std::filesystem::path(cfg.out_dir) / label;
                    fanet::write_campaign_files(result, shared, dir.string());
                    long failures = 0;
                    for (const auto& r : result.runs)
                        if (!r.error.empty()) {
                            ++failures;
                            std::cerr << "  run " << r.run_index << " failed: " << r.error
                                      << std::endl;
                        }
                    std::cerr << "  mean pdr " << result.pdr.mean << ", mean oe "
                              << result.oe.mean << (failures ? " (with failed runs)" : "")
                              << std::endl;
                    all.push_back(std::move(result));
                }
            }
        }

        const std::filesystem::path root(base.out_dir);
        std::filesystem::create_directories(root);
        write_text(root / "plot_by_size.csv",
                   fanet::plotdata_csv(all, fanet::PlotLayout::by_size));
        write_text(root / "plot_by_phase.csv",
                   fanet::plotdata_csv(all, fanet::PlotLayout::by_phase));
        write_text(root / "plot_by_condition.csv",
                   fanet::plotdata_csv(all, fanet::PlotLayout::by_condition));
        return 0;
    } catch (const fanet::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
}
