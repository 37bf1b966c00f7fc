#include <gtest/gtest.h>

#include <random>

#include "mixseg/em.hpp"
#include "mixseg/io.hpp"
#include "test_support.hpp"

using namespace mixseg;
using namespace mixseg::io;

namespace {

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const FormatError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int rep = 0; rep < 1000; ++rep) {
        const double v = u(rng) * std::pow(10.0, rep % 20 - 10);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(-3.0), "-3");
}

TEST(DatasetCsv, RoundTrip) {
    const auto b = simulate(SimSpec::cosine(3, 4, 0.5, 2));
    const auto text = dataset_to_csv(b.dataset);
    EXPECT_EQ(text.substr(0, text.find('\n')), "individual_id,time_index,sample_index,value");
    EXPECT_EQ(dataset_from_csv(text).curves, b.dataset.curves);
}

TEST(DatasetCsv, AcceptsAnyRowOrderAndCrlf) {
    const std::string text =
        "individual_id,time_index,sample_index,value\r\n"
        "1,2,1,4\r\n1,1,2,2\r\n1,1,1,1\r\n1,2,2,8\r\n";
    const auto ds = dataset_from_csv(text);
    EXPECT_EQ(ds.curves(0, 0, 0), 1.0);
    EXPECT_EQ(ds.curves(0, 0, 1), 2.0);
    EXPECT_EQ(ds.curves(0, 1, 0), 4.0);
    EXPECT_EQ(ds.curves(0, 1, 1), 8.0);
}

TEST(DatasetCsv, ErrorsCarryLineNumbers) {
    const std::string head = "individual_id,time_index,sample_index,value\n";
    EXPECT_EQ(error_of([&] { dataset_from_csv(head + "1,1,1,0\n1,1,2,abc\n"); }), "line 3: invalid value 'abc'");
    EXPECT_EQ(error_of([&] { dataset_from_csv(head + "1,1,1\n"); }), "line 2: expected 4 fields, got 3");
    EXPECT_EQ(error_of([&] { dataset_from_csv(head + "0,1,1,2\n"); }), "line 2: individual_id must be >= 1");
    EXPECT_NE(error_of([&] { dataset_from_csv("a,b,c,d\n1,1,1,1\n"); }).find("line 1"), std::string::npos);
    EXPECT_NE(error_of([&] { dataset_from_csv(head + "1,1,1,0\n1,1,1,0\n2,1,1,0\n"); }).find("rows"), std::string::npos);
    EXPECT_NE(error_of([&] { dataset_from_csv(head + "1,1,2,0\n1,1,2,0\n"); }).find("duplicate"), std::string::npos);
    EXPECT_NE(error_of([&] { dataset_from_csv(""); }).find("missing header"), std::string::npos);
}

TEST(CoefficientCsv, RoundTripWithMetadata) {
    std::mt19937_64 rng(3);
    auto y = oracle::random_tensor(4, 5, 3, rng);
    y.level = 2;
    y.source_H = 12;
    const auto back = coefficients_from_csv(coefficients_to_csv(y));
    EXPECT_EQ(back.y, y.y);
    EXPECT_EQ(back.level, 2);
    EXPECT_EQ(back.source_H, 12);
}

TEST(CoefficientCsv, LevelZeroPassThrough) {
    FunctionalDataset ds;
    ds.curves = Tensor3<double>(2, 3, 4);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (auto& v : ds.curves.flat()) v = g(rng);
    const auto y = project_dataset(ds, WaveletConfig{0, WaveletFamily::Haar});
    const auto back = coefficients_from_csv(coefficients_to_csv(y));
    EXPECT_EQ(back.y, ds.curves);
    EXPECT_EQ(back.level, 0);
}

TEST(CoefficientCsv, Errors) {
    const std::string text = "# mixseg-coefficients level=1 p=3 source_H=6\nindividual_id,time_index,c1,c2\n1,1,0,0\n";
    EXPECT_NE(error_of([&] { coefficients_from_csv(text); }).find("p=3"), std::string::npos);
    EXPECT_EQ(error_of([&] { coefficients_from_csv("individual_id,time_index,c1\n1,1,x\n"); }),
              "line 2: invalid coefficient 'x'");
}

TEST(Json, FitReportRoundTrip) {
    const auto y = project_dataset(simulate(SimSpec::cosine(30, 12, 1.0, 1)).dataset, WaveletConfig{});
    EMConfig em;
    em.n_restarts = 2;
    em.threads = 1;
    const auto f = fit(y, ModelConfig::make({1, 2, 3}), em);
    const auto back = fit_report_from_json(json::parse(to_json(f).dump()));
    EXPECT_EQ(back.params, f.params);
    EXPECT_EQ(back.responsibilities, f.responsibilities);
    EXPECT_EQ(back.partition, f.partition);
    EXPECT_EQ(back.loglik_trace, f.loglik_trace);
    EXPECT_EQ(back.n_iter, f.n_iter);
    EXPECT_EQ(back.converged, f.converged);
    EXPECT_EQ(back.config(), f.config());
}

TEST(Json, ConfigChecksK) {
    EXPECT_EQ(config_from_json(json::parse(R"({"L":[2,1]})")).L, (std::vector<int>{1, 2}));
    EXPECT_THROW(config_from_json(json::parse(R"({"K":3,"L":[2,1]})")), FormatError);
}

TEST(Json, SimSpecRoundTripReproducesBundle) {
    auto spec = SimSpec::cosine(12, 10, 0.4, 77);
    spec.grid = TimeGrid::Global;
    const auto a = simulate(spec);
    const auto truth = truth_from_json(json::parse(truth_to_json(a).dump()));
    const auto b = simulate(truth.spec);
    EXPECT_EQ(a.dataset.curves, b.dataset.curves);
    EXPECT_EQ(truth.z_true, a.z_true);
    EXPECT_EQ(truth.params_true, a.params_true);

    const auto toy = sim_spec_from_json(to_json(SimSpec::toy(3)));
    EXPECT_EQ(toy.scenario, Scenario::ToyNeutralActive);
    EXPECT_EQ(simulate(toy).dataset.curves, simulate(SimSpec::toy(3)).dataset.curves);
    EXPECT_THROW(sim_spec_from_json(json::parse(R"({"scenario":"sine"})")), FormatError);
}

TEST(Json, NonFiniteBicIsNull) {
    SelectionResult r;
    r.search_trace.push_back({ModelConfig::make({0}), -std::numeric_limits<double>::infinity(), false, "x", 1});
    const auto j = to_json(r);
    EXPECT_TRUE(j.at("bic").is_null());
    EXPECT_TRUE(j.at("search_trace")[0].at("bic").is_null());
}

TEST(Files, AtomicWriteAndRead) {
    const auto dir = std::filesystem::temp_directory_path() / "mixseg_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "x.txt";
    write_file_atomic(path, "hello\n");
    EXPECT_EQ(read_file(path), "hello\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "x.txt.tmp"));
    EXPECT_THROW(read_file(dir / "missing.txt"), FormatError);
    std::filesystem::remove_all(dir);
}
