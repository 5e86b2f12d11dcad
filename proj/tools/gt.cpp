// gt: adaptive group-testing engine command line.
//
//   gt simulate --config <path> [--runs N] [--seed S] [--out DIR] [--threads T]
//   gt bounds   --config <path>
//   gt serve    --port P --state-dir DIR
//
// GT_LOG selects the log level (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "gt/commands.hpp"
#include "gt/http.hpp"

namespace {

gt::RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw gt::ConfigError(path + ": cannot open configuration");
    std::stringstream ss;
    ss << f.rdbuf();
    return gt::parse_run_config(ss.str(), path);
}

void init_logging() {
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("GT_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"Adaptive group testing with mutual-information pool design"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    auto* simulate = app.add_subcommand("simulate", "Run simulated campaigns and write CSV/JSON artifacts");
    simulate->add_option("--config", config_path, "JSON run configuration")->required();
    simulate->add_option("--runs", runs, "Override the number of runs per cell");
    simulate->add_option("--seed", seed, "Override the base seed");
    simulate->add_option("--out", out_dir, "Override the output directory");
    simulate->add_option("--threads", threads, "Worker threads");

    auto* bounds = app.add_subcommand("bounds", "Print the sample-complexity report");
    bounds->add_option("--config", config_path, "JSON run configuration")->required();

    int port = 8080;
    std::string state_dir = "gt_sessions";
    std::string host = "0.0.0.0";
    auto* serve = app.add_subcommand("serve", "Serve the live-session HTTP API");
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--state-dir", state_dir, "Directory for session journals");
    serve->add_option("--host", host, "Bind address");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            auto cfg = load_config(config_path);
            if (runs) {
                if (*runs < 1) throw gt::ConfigError("--runs must be at least 1");
                cfg.runs = *runs;
            }
            if (seed) cfg.seed = *seed;
            if (out_dir) cfg.output_dir = *out_dir;
            if (threads) {
                if (*threads < 1) throw gt::ConfigError("--threads must be at least 1");
                cfg.threads = *threads;
            }
            spdlog::info("simulating {} cell(s) x {} runs, seed {}", cfg.grid().size(), cfg.runs, cfg.seed);
            const auto artifacts = gt::run_simulation(cfg);
            gt::write_artifacts(artifacts, cfg.output_dir);
            gt::write_summary_table(artifacts.report, std::cout);
            spdlog::info("wrote artifacts to {}", cfg.output_dir);
        } else if (bounds->parsed()) {
            const auto cfg = load_config(config_path);
            std::cout << gt::run_bounds(cfg).dump(2) << '\n';
        } else if (serve->parsed()) {
            gt::SessionService service{std::filesystem::path(state_dir)};
            httplib::Server server;
            gt::register_routes(server, service);
            server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
                spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
            });
            spdlog::info("serving {} session(s) from {} on {}:{}", service.size(), state_dir, host, port);
            if (!server.listen(host, port)) {
                spdlog::error("failed to bind {}:{}", host, port);
                return 1;
            }
        }
    } catch (const gt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
