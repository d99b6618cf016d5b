#include <gtest/gtest.h>

#include <cmath>

#include "ep/pipeline.hpp"

using namespace ep;

namespace {

PipelineConfig small_config() {
    PipelineConfig c;
    c.protect.trajectories = 40;
    c.protect.durations = {0.1};
    c.pipeline.trajectories = 10;
    c.sweep.d_points = 2;
    c.sweep.gamma_points = 2;
    c.sweep.d_min = c.sweep.gamma_min = 1.0;
    c.sweep.d_max = c.sweep.gamma_max = 2.0;
    return c;
}

size_t count_lines(const std::string& s) { return static_cast<size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Config, DefaultsValidateAndRoundTrip) {
    PipelineConfig c;
    EXPECT_NO_THROW(c.validate());
    nlohmann::json j = to_json(c);
    EXPECT_EQ(to_json(parse_config(j)), j);
    EXPECT_EQ(to_json(parse_config(to_json(parse_config(j)))), j);
}

TEST(Config, PartialDocumentKeepsDefaults) {
    PipelineConfig c = parse_config(nlohmann::json{{"ghz", {{"n_dots", 6}}}, {"swap", {{"p_success", 0.5}}}});
    EXPECT_EQ(c.ghz.n_dots, 6);
    EXPECT_EQ(c.ghz.j1, 1e8);
    ASSERT_TRUE(c.swap.p_success.has_value());
    EXPECT_EQ(*c.swap.p_success, 0.5);
}

TEST(Config, ErrorsAreAggregated) {
    nlohmann::json j = {{"ghz", {{"n_dots", 1}, {"typo", 3}}}, {"extra", 1}, {"protect", {{"alpha", "two"}}}};
    try {
        parse_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.errors.size(), 4u);
    }
}

TEST(Ghz, TwoDotReport) {
    PipelineConfig c;
    c.ghz.n_dots = 2;
    RunOutput out = cmd_ghz(c, std::nullopt, Format::Csv);
    EXPECT_TRUE(out.ok);
    EXPECT_GE(out.report["fidelity"].get<double>(), 1.0 - 1e-10);
    EXPECT_NEAR(out.report["timing"]["total_s"].get<double>(), 7.85e-9, 1e-11);
    EXPECT_EQ(out.report["schema"], kReportSchema);
    EXPECT_TRUE(out.files.count("state.csv"));
}

TEST(Ghz, FourDotStepCount) {
    PipelineConfig c;
    RunOutput out = cmd_ghz(c, std::nullopt, Format::Json);
    EXPECT_TRUE(out.report["ghz_class"].get<bool>());
    EXPECT_EQ(out.report["timing"]["ising_steps"].get<size_t>() + out.report["timing"]["heisenberg_steps"].get<size_t>(),
              3u);
}

TEST(Ghz, OneDotIsAConfigError) {
    PipelineConfig c;
    c.ghz.n_dots = 1;
    EXPECT_THROW(cmd_ghz(c, std::nullopt, Format::Csv), ConfigError);
}

TEST(Protect, NoLossGivesPerfectArms) {
    PipelineConfig c = small_config();
    c.protect.kappa = 0.0;
    RunOutput out = cmd_protect(c, 1, Format::Csv);
    for (const auto& row : out.report["table"]) {
        EXPECT_NEAR(row["corrected"]["mean"].get<double>(), 1.0, 1e-8);
        EXPECT_NEAR(row["uncorrected"]["mean"].get<double>(), 1.0, 1e-8);
    }
}

TEST(Protect, RowCountMatchesEnsemble) {
    PipelineConfig c = small_config();
    RunOutput out = cmd_protect(c, 2, Format::Csv);
    const size_t expect = 1 * 40 * 2 * 3;
    EXPECT_EQ(count_lines(out.files.at("trajectories.csv")), expect + 1);
    EXPECT_EQ(out.report["parity_mismatches"].get<size_t>(), 0u);
}

TEST(Determinism, OutputsIndependentOfWorkerCount) {
    PipelineConfig c = small_config();
    EXPECT_EQ(cmd_protect(c, 1, Format::Csv).files, cmd_protect(c, 3, Format::Csv).files);
    EXPECT_EQ(cmd_sweep(c, 1, Format::Json).files, cmd_sweep(c, 4, Format::Json).files);
    EXPECT_EQ(cmd_pipeline(c, 1, Format::Csv).files, cmd_pipeline(c, 2, Format::Csv).files);
}

TEST(Determinism, DifferentSeedChangesTrajectories) {
    PipelineConfig c = small_config();
    PipelineConfig d = c;
    d.base_seed = c.base_seed + 1;
    EXPECT_NE(cmd_protect(c, 1, Format::Csv).files.at("trajectories.csv"),
              cmd_protect(d, 1, Format::Csv).files.at("trajectories.csv"));
}

TEST(Swap, GammaTwoZeroRow) {
    PipelineConfig c;
    c.swap.gamma2 = 0.0;
    RunOutput out = cmd_swap(c, Format::Csv);
    EXPECT_EQ(out.report["p_final"].get<double>(), 0.0);
}

TEST(Sweep, CsvShape) {
    PipelineConfig c = small_config();
    RunOutput out = cmd_sweep(c, 1, Format::Csv);
    const std::string& csv = out.files.at("sweep.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "d,gamma,p_longtime,converged,t_end,n_k");
    EXPECT_EQ(count_lines(csv), 5u);
    EXPECT_EQ(out.report["unconverged"].get<size_t>(), 0u);
}

TEST(Pipeline, IdealFourDots) {
    PipelineConfig c = small_config();
    c.protect.kappa = 0.0;
    c.swap.p_success = 1.0;
    RunOutput out = cmd_pipeline(c, 1, Format::Csv);
    EXPECT_GE(out.report["final_fidelity"].get<double>(), 1.0 - 1e-6);
    EXPECT_EQ(out.report["n_photons"].get<size_t>(), 2u);
    EXPECT_EQ(out.report["herald"]["total"].get<double>(), 1.0);
}

TEST(Pipeline, LossyRunIsBetweenZeroAndIdeal) {
    PipelineConfig c = small_config();
    c.protect.kappa = 1.0;
    c.pipeline.duration = 0.2;
    c.pipeline.trajectories = 60;
    c.swap.p_success = 0.9;
    RunOutput out = cmd_pipeline(c, 1, Format::Csv);
    const double f = out.report["final_fidelity"].get<double>();
    EXPECT_GT(f, 0.0);
    EXPECT_LT(f, 1.0);
    EXPECT_LT(out.report["herald"]["total"].get<double>(), 1.0);
}

TEST(Pipeline, OddDotsNeedFrequencyRails) {
    PipelineConfig c = small_config();
    c.ghz.n_dots = 3;
    c.protect.kappa = 0.0;
    c.swap.p_success = 1.0;
    EXPECT_THROW(cmd_pipeline(c, 1, Format::Csv), ConfigError);
    c.swap.rail_encoding = "frequency";
    RunOutput out = cmd_pipeline(c, 1, Format::Csv);
    EXPECT_EQ(out.report["n_photons"].get<size_t>(), 3u);
    EXPECT_GE(out.report["final_fidelity"].get<double>(), 1.0 - 1e-6);
}

TEST(Format, SeventeenSignificantDigits) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(2.0), "2");
}
