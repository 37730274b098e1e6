#include <catch2/catch.hpp>

#include "barytrans/json_io.hpp"

using namespace barytrans;

TEST_CASE("measure schema: round trips and the 1% normalization rule", "[json]") {
    {
        const json j = {{"type", "discrete"},
                        {"points", {{0.0}, {1.0}}},
                        {"weights", {0.502, 0.5}}};  // sums to 1.002: normalized
        const auto m = expect_discrete(measure_from_json(j), "test");
        CHECK(m.weights().sum() == Approx(1.0).margin(1e-12));
    }
    {
        const json j = {{"type", "discrete"},
                        {"points", {{0.0}, {1.0}}},
                        {"weights", {0.7, 0.5}}};  // sums to 1.2: rejected
        CHECK_THROWS_AS(measure_from_json(j), std::invalid_argument);
    }
    {
        const auto m = DiscreteMeasure::line({-1, 2}, {0.25, 0.75});
        const auto back = expect_discrete(measure_from_json(to_json(m)), "test");
        CHECK(MartingaleKernel::measures_close(m, back, 1e-12));
    }
    {
        Eigen::VectorXd mean(2);
        mean << 1, 0;
        const GaussianMeasure g(mean, Eigen::Vector2d(1, 4).asDiagonal());
        const auto back = expect_gaussian(measure_from_json(to_json(g)), "test");
        CHECK((back.mean() - g.mean()).norm() == 0.0);
        CHECK((back.cov() - g.cov()).norm() == 0.0);
    }
    CHECK_THROWS_AS(measure_from_json(json{{"type", "mystery"}}), std::invalid_argument);
}

TEST_CASE("grid function schema: inf sentinel round trip", "[json]") {
    Eigen::VectorXd g(3), v(3);
    g << -1, 0, 1;
    v << 0.5, kInf, 2.0;
    const GridFunction f(g, v);
    const auto back = grid_function_from_json(to_json(f));
    CHECK(back.value(0) == 0.5);
    CHECK(std::isinf(back.value(1)));
    CHECK(back.value(2) == 2.0);
    CHECK((back.grid1d() - g).norm() == 0.0);
}

TEST_CASE("max-affine schema: round trip", "[json]") {
    const auto f = MaxAffineFunction::line({-1, 0.5}, {0.25, -2});
    const auto back = max_affine_from_json(to_json(f));
    CHECK((back.slopes() - f.slopes()).norm() == 0.0);
    CHECK((back.offsets() - f.offsets()).norm() == 0.0);
}

TEST_CASE("canonical_dump: deterministic keys and 12-digit floats", "[json]") {
    json j;
    j["zeta"] = 1.0 / 3.0;
    j["alpha"] = -0.0;
    j["list"] = {1.5, 2, true};
    const std::string a = canonical_dump(j);
    const std::string b = canonical_dump(j);
    CHECK(a == b);
    CHECK(a.find("\"alpha\"") < a.find("\"zeta\""));  // sorted keys
    CHECK(a.find("0.333333333333") != std::string::npos);
    CHECK(a.find("-0") == std::string::npos);  // negative zero collapsed

    // serialization of a full report is reproducible byte for byte
    const auto mu = DiscreteMeasure::line({0, 1}, {0.5, 0.5});
    const auto nu = DiscreteMeasure::line({0, 2}, {0.5, 0.5});
    const auto r1 = canonical_dump(to_json(t2bar_discrete(mu, nu)));
    const auto r2 = canonical_dump(to_json(t2bar_discrete(mu, nu)));
    CHECK(r1 == r2);
    CHECK(r1.find("\"value\"") != std::string::npos);
    CHECK(r1.find("\"fwGap\"") != std::string::npos);
}

TEST_CASE("gaussian report schema: fields and method string", "[json]") {
    const GaussianMeasure mu(Eigen::VectorXd::Zero(2), Eigen::Vector2d(4, 1).asDiagonal());
    Eigen::VectorXd m2(2);
    m2 << 1, 0;
    const GaussianMeasure nu(m2, Eigen::Vector2d(1, 4).asDiagonal());
    const json j = to_json(t2bar_gaussian(mu, nu));
    CHECK(j.at("value").get<double>() == Approx(2.0));
    CHECK(j.at("method") == "diagonal");
    CHECK(j.at("sigmaBar").size() == 2);
    CHECK(j.at("A")[0][0].get<double>() == Approx(0.5));
    CHECK(j.at("projection").at("type") == "gaussian");
}

TEST_CASE("path ensemble: CSV header and summary fields", "[json]") {
    const GaussianMeasure mu(Eigen::VectorXd::Zero(2), Eigen::Vector2d(4, 1).asDiagonal());
    Eigen::VectorXd m2(2);
    m2 << 1, 0;
    const GaussianMeasure nu(m2, Eigen::Vector2d(1, 4).asDiagonal());
    const auto rep = t2bar_gaussian(mu, nu);
    Eigen::VectorXd times(3);
    times << 0, 0.5, 1;
    const auto ens = simulate(mu, nu, rep, times, 8, 3);
    const std::string csv = to_csv(ens);
    CHECK(csv.rfind("path,time,x0,x1", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 8 * 3);
    const json s = summary_json(ens);
    CHECK(s.at("paths") == 8);
    CHECK(s.at("dim") == 2);
    CHECK(s.at("empiricalMeans").size() == 3);
}
