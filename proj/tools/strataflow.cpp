#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strataflow/io.hpp"
#include "strataflow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace strataflow;

namespace {

struct Flags {
    std::string scenario, config, out = ".", track;
    std::vector<int> j;
    std::vector<double> p;
    std::optional<double> eta, gamma, delta, radius;
    std::optional<int> q, grid, samples;
    std::vector<std::string> inputs;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string scenario_list() {
    std::string s;
    for (const auto& n : scenario_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorKind::InvalidInput, "cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
}

// Config file (or the one recorded in a track), then explicit flags on top.
RunConfig build_config(const Flags& f, const std::map<std::string, std::string>& meta = {}) {
    RunConfig c;
    if (!f.config.empty()) {
        c = config_from_json(read_json(f.config));
    } else if (auto it = meta.find("config"); it != meta.end()) {
        c = config_from_json(nlohmann::json::parse(it->second));
    }
    if (!f.scenario.empty()) c.scenario = f.scenario;
    if (!is_scenario(c.scenario)) throw UsageError("unknown scenario '" + c.scenario + "'; valid scenarios: " + scenario_list());
    if (!f.j.empty()) c.j = f.j;
    if (!f.p.empty()) c.p = f.p;
    if (f.eta) c.strat.eta = *f.eta;
    if (f.gamma) c.strat.gamma = *f.gamma;
    if (f.delta) c.strat.delta = *f.delta;
    if (f.q) c.strat.q = *f.q;
    if (f.grid) c.grid = *f.grid;
    if (f.samples) c.samples = *f.samples;
    if (f.radius) c.radius = *f.radius;
    try {
        validate(c);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return c;
}

std::map<std::string, std::string> provenance(const RunConfig& c) {
    return {{"config_hash", config_hash(c)}, {"config", to_json(c).dump()}, {"scenario", c.scenario}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorKind::InvalidInput, "cannot open " + path.string() + " for writing");
    os << text;
}

void write_report(const fs::path& dir, const std::string& stem, const RunConfig& c, const Report& r) {
    fs::create_directories(dir);
    write_text(dir / (stem + ".csv"), "# config_hash " + config_hash(c) + "\n" + r.csv);
    write_text(dir / (stem + ".json"), r.summary.dump(2) + "\n");
}

// The flow to analyse: a saved track when given, else the scenario simulated on the spot.
std::pair<FlowTrack, RunConfig> input_flow(const Flags& f) {
    if (!f.track.empty()) {
        auto tf = load_track(f.track);
        return {std::move(tf.track), build_config(f, tf.meta)};
    }
    if (f.scenario.empty() && f.config.empty()) throw UsageError("need --track, --scenario or --config");
    auto c = build_config(f);
    return {make_track(c), c};
}

int cmd_simulate(const Flags& f) {
    if (f.scenario.empty() && f.config.empty()) throw UsageError("simulate needs --scenario or --config");
    auto c = build_config(f);
    auto flow = make_track(c);
    fs::create_directories(f.out);
    auto path = fs::path(f.out) / (c.scenario + ".track");
    save_track(path.string(), flow, provenance(c));
    std::cout << path.string() << ": " << flow.slices.size() << " slices";
    if (!flow.singular_points.empty()) std::cout << ", first singular time " << flow.singular_points.front().t;
    std::cout << "\n";
    return 0;
}

int cmd_stratify(const Flags& f) {
    auto [flow, c] = input_flow(f);
    write_report(f.out, "strata", c, run_stratify(flow, c));
    std::cout << (fs::path(f.out) / "strata.json").string() << "\n";
    return 0;
}

int cmd_regularity(const Flags& f) {
    auto [flow, c] = input_flow(f);
    write_report(f.out, "regularity", c, run_regularity(flow, c));
    std::cout << (fs::path(f.out) / "regularity.json").string() << "\n";
    return 0;
}

int cmd_aggregate(const Flags& f) {
    std::vector<nlohmann::json> all;
    for (const auto& in : f.inputs) all.push_back(read_json(in));
    auto out = aggregate(all);
    fs::create_directories(f.out);
    write_text(fs::path(f.out) / "aggregate.json", out.dump(2) + "\n");
    std::cout << (fs::path(f.out) / "aggregate.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean curvature flow strata and regularity toolkit"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* s) {
        s->add_option("--scenario", f.scenario, "scenario name (" + scenario_list() + ")");
        s->add_option("--config", f.config, "JSON run configuration");
        s->add_option("--out", f.out, "output directory");
        s->add_option("--radius", f.radius, "initial radius for circle / sphere");
        s->add_option("--samples", f.samples, "number of sampled points");
    };
    auto analysis = [&](CLI::App* s) {
        common(s);
        s->add_option("--track", f.track, "saved track file");
        s->add_option("--j", f.j, "strata to report")->delimiter(',');
        s->add_option("--eta", f.eta, "fit threshold");
        s->add_option("--gamma", f.gamma, "scale ratio");
        s->add_option("--delta", f.delta, "energy threshold");
        s->add_option("--q", f.q, "signature parameter q");
        s->add_option("--p", f.p, "L^p exponents")->delimiter(',');
        s->add_option("--grid", f.grid, "tubular-volume cells per radius");
    };
    auto* sim = app.add_subcommand("simulate", "run a scenario and save its track");
    common(sim);
    auto* strat = app.add_subcommand("stratify", "quantitative strata report");
    analysis(strat);
    auto* reg = app.add_subcommand("regularity", "regularity scale and L^p report");
    analysis(reg);
    auto* agg = app.add_subcommand("aggregate", "merge JSON reports that share a config hash");
    agg->add_option("inputs", f.inputs, "JSON reports")->required();
    agg->add_option("--out", f.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*sim) return cmd_simulate(f);
        if (*strat) return cmd_stratify(f);
        if (*reg) return cmd_regularity(f);
        return cmd_aggregate(f);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
