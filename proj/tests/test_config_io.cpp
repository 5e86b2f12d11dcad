#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "gt/commands.hpp"
#include "gt/config.hpp"
#include "gt/report_io.hpp"

using namespace gt;

namespace {

const char* kBasic = R"({
  "n": 10,
  "prior": 0.1,
  "true_params": {"s": 0.8, "sigma": 0.8},
  "delta": 0.6,
  "runs": 4,
  "max_tests": 6,
  "seed": 11
})";

std::string error_of(const std::string& text) {
    try {
        parse_run_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

int line_count(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST(RunConfig, ParsesBasicFile) {
    const auto c = parse_run_config(kBasic);
    EXPECT_EQ(c.n, 10);
    EXPECT_EQ(c.prior_q.size(), 10u);
    EXPECT_EQ(c.prior_q[3], 0.1);
    EXPECT_EQ(c.true_params(), TestParams(0.8, 0.8));
    EXPECT_EQ(c.assumed_params(), c.true_params());
    EXPECT_EQ(c.runs, 4);
    EXPECT_EQ(c.seed, 11u);
    EXPECT_FALSE(c.sweep());
    EXPECT_EQ(c.grid().size(), 1u);
    EXPECT_EQ(c.episode().stopping.max_tests, 6);
}

TEST(RunConfig, GridAndGroundTruth) {
    const auto c = parse_run_config(R"({
      "n": 3, "prior": [0.1, 0.2, 0.3],
      "true_params": {"s": 0.9, "sigma": 0.95},
      "grid": {"sigma_prime": [0.6, 0.7], "s_prime": [0.8, 0.9, 0.99]},
      "ground_truth": {"mode": "prior", "rates": [0, 0, 1]},
      "strategy": "greedy"
    })");
    EXPECT_TRUE(c.sweep());
    EXPECT_EQ(c.grid().size(), 6u);
    EXPECT_EQ(c.truth.mode, GroundTruth::Mode::sample_from_prior);
    EXPECT_EQ(c.truth.rates[2], 1.0);
    EXPECT_EQ(c.strategy, SelectionStrategy::greedy);
}

TEST(RunConfig, ErrorsNameFieldAndLine) {
    std::string text = kBasic;
    text.replace(text.find("\"runs\": 4"), 9, "\"runs\": 0");
    const auto msg = error_of(text);
    EXPECT_NE(msg.find("cfg.json:6: runs"), std::string::npos) << msg;

    text = kBasic;
    text.replace(text.find("\"sigma\": 0.8"), 12, "\"sigma\": 1.8");
    EXPECT_NE(error_of(text).find("cfg.json:4: true_params"), std::string::npos) << error_of(text);

    EXPECT_NE(error_of(R"({"n": 2, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8},
  "colour": 1})").find("cfg.json:2: colour: unknown field"),
              std::string::npos);
    EXPECT_NE(error_of("{\n\"n\": 2,\n]").find("cfg.json:3: invalid JSON"), std::string::npos);
    EXPECT_NE(error_of(R"({"n": 2, "true_params": {"s": 0.8, "sigma": 0.8}})").find("prior: missing"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"n": 21, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8}})").find("n:"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"n": 2, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8}, "batch_size": 2})")
                  .find("batch_size"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"n": 2, "prior": [0.1], "true_params": {"s": 0.8, "sigma": 0.8}})").find("prior"),
              std::string::npos);
    EXPECT_NE(error_of(R"({"n": 2, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8},
      "ground_truth": {"mode": "fixed_k", "k": 3}})")
                  .find("ground_truth.k"),
              std::string::npos);
}

TEST(SimulationArtifacts, SeriesHasOneRowPerCellAndIteration) {
    auto c = parse_run_config(R"({
      "n": 6, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8},
      "grid": {"sigma_prime": [0.7, 0.8], "s_prime": [0.9]},
      "runs": 3, "max_tests": 5, "checkpoints": [2, 4], "write_traces": true
    })");
    const auto a = run_simulation(c);
    EXPECT_EQ(a.series_csv.substr(0, a.series_csv.find('\n')), kSeriesHeader);
    EXPECT_EQ(line_count(a.series_csv), 1 + 2 * 5);
    const auto j = nlohmann::json::parse(a.summary_json);
    ASSERT_EQ(j["cells"].size(), 2u);
    EXPECT_EQ(j["cells"][0]["stop_times"].size(), 3u);
    EXPECT_EQ(j["config"]["runs"], 3);

    // Trace round trip.
    std::istringstream in(a.traces_csv);
    const auto all = read_selected_f(in);
    EXPECT_EQ(all.size(), 6u);
    std::istringstream in2(a.traces_csv);
    const auto one = read_selected_f(in2, GridCell{0.8, 0.9});
    ASSERT_EQ(one.size(), 3u);
    for (const auto& seq : one) EXPECT_EQ(seq.size(), 5u);

    // Same config, same bytes.
    const auto b = run_simulation(c);
    EXPECT_EQ(a.series_csv, b.series_csv);
    EXPECT_EQ(a.summary_json, b.summary_json);
    c.threads = 3;
    EXPECT_EQ(run_simulation(c).summary_json, a.summary_json);
}

TEST(TraceReader, RejectsMalformedInput) {
    std::istringstream bad_header("a,b\n");
    EXPECT_THROW(read_selected_f(bad_header), ConfigError);
    std::istringstream short_row(std::string(kTraceHeader) + "\n0.8,0.8,0,1\n");
    EXPECT_THROW(read_selected_f(short_row), ConfigError);
}

TEST(BoundsCommand, MatchedAndMismatchedReports) {
    const auto matched = run_bounds(parse_run_config(
        R"({"n": 10, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8}, "delta": 0.6})"));
    EXPECT_NEAR(matched["T_E"].get<double>(), 6.7464, 1e-4);
    EXPECT_TRUE(matched["alpha"].is_null());

    const auto mis = run_bounds(parse_run_config(
        R"({"n": 10, "prior": 0.1, "true_params": {"s": 0.8, "sigma": 0.8}, "delta": 0.6,
            "assumed_params": {"s": 0.9, "sigma": 0.6}})"));
    EXPECT_NEAR(mis["f_prime"].get<double>(), 0.534537, 1e-6);
    EXPECT_NEAR(mis["alpha"].get<double>(), 0.0062, 5e-4);
}

TEST(FormatNumber, ShortestStableText) {
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(1.0 / 3.0, 17), "0.33333333333333331");
}
