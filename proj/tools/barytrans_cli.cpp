// barytrans -- command-line front end for barycentric optimal transport:
// discrete and Gaussian solvers, projections, convex-order checks, duality
// certificates, pavings, geodesics, and the full acceptance suite.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "barytrans/acceptance.hpp"
#include "barytrans/barytrans.hpp"
#include "barytrans/json_io.hpp"

namespace {

using namespace barytrans;

struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    double tol = 1e-7;
    long maxIter = 100000;
    std::uint64_t seed = 0;
    int samples = 1000;
    std::string out;
    bool pretty = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tol", o.tol, "numerical tolerance");
    cmd->add_option("--max-iter", o.maxIter, "iteration budget");
    cmd->add_option("--seed", o.seed, "random seed (all randomness is derived from it)");
    cmd->add_option("--samples", o.samples, "sample count for Monte Carlo modes");
    cmd->add_option("--out", o.out, "write the report here instead of stdout");
    cmd->add_flag("--pretty", o.pretty, "indent the JSON output");
}

void emit(const json& j, const CommonOpts& o) {
    const std::string text = canonical_dump(j, o.pretty);
    if (o.out.empty())
        std::cout << text;
    else
        write_file(o.out, text);
}

Eigen::VectorXd parse_times(const std::string& spec) {
    std::vector<double> ts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) ts.push_back(std::stod(tok));
    Eigen::VectorXd out(static_cast<int>(ts.size()));
    for (std::size_t i = 0; i < ts.size(); ++i) out(static_cast<int>(i)) = ts[i];
    return out;
}

int suite_threads() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned threads = std::min(hw, 4u);
    if (const char* env = std::getenv("BARYTRANS_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) threads = std::min<unsigned>(static_cast<unsigned>(v), hw);
    }
    return static_cast<int>(threads);
}

GaussianSolveOptions gaussian_opts(const CommonOpts& o, const std::string& method) {
    GaussianSolveOptions opts;
    opts.pgTol = std::min(o.tol, 1e-7);
    opts.maxIter = o.maxIter;
    opts.throwOnNonconvergence = true;
    if (method == "diagonal") opts.method = GaussianMethod::Diagonal;
    else if (method == "commuting") opts.method = GaussianMethod::Commuting;
    else if (method == "projected-gradient") opts.method = GaussianMethod::ProjectedGradient;
    else if (method != "auto") throw std::invalid_argument("unknown --method: " + method);
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"barycentric optimal transport toolkit"};
    app.require_subcommand(1);

    std::string muPath, nuPath, alphaPath, betaPath, fnPath, method = "auto", mode = "simulate";
    std::string timesSpec = "0,0.25,0.5,0.75,1";
    double sArg = 0.25, tArg = 0.75;
    int subdivisions = 4;
    std::string gridSpec;

    CommonOpts o;

    auto* t2bar = app.add_subcommand("t2bar", "discrete barycentric transport cost");
    t2bar->add_option("--mu", muPath, "source measure JSON")->required();
    t2bar->add_option("--nu", nuPath, "target measure JSON")->required();
    add_common(t2bar, o);

    auto* t2g = app.add_subcommand("t2bar-gaussian", "Gaussian barycentric transport cost");
    t2g->add_option("--mu", muPath)->required();
    t2g->add_option("--nu", nuPath)->required();
    t2g->add_option("--method", method, "auto|diagonal|commuting|projected-gradient");
    add_common(t2g, o);

    auto* pback = app.add_subcommand("project-backward", "backward projection in convex order");
    pback->add_option("--mu", muPath)->required();
    pback->add_option("--nu", nuPath)->required();
    add_common(pback, o);

    auto* pfwd = app.add_subcommand("project-forward", "forward projection in convex order");
    pfwd->add_option("--mu", muPath)->required();
    pfwd->add_option("--nu", nuPath)->required();
    pfwd->add_option("--grid", gridSpec, "lo:hi:count support grid (discrete 1D mode)");
    add_common(pfwd, o);

    auto* order = app.add_subcommand("check-order", "convex order with Strassen witness");
    order->add_option("--alpha", alphaPath)->required();
    order->add_option("--beta", betaPath)->required();
    add_common(order, o);

    auto* certify = app.add_subcommand("certify", "duality-gap certificate for a discrete solve");
    certify->add_option("--mu", muPath)->required();
    certify->add_option("--nu", nuPath)->required();
    add_common(certify, o);

    auto* paving = app.add_subcommand("paving", "convex paving of a max-affine function");
    paving->add_option("--function", fnPath, "max-affine JSON {slopes, offsets}")->required();
    paving->add_option("--alpha", alphaPath, "run the invariance check against alpha");
    paving->add_option("--beta", betaPath, "...and beta");
    add_common(paving, o);

    auto* geo = app.add_subcommand("geodesic", "Gaussian geodesics: simulate, scaling, length");
    geo->add_option("--mu", muPath)->required();
    geo->add_option("--nu", nuPath)->required();
    geo->add_option("--mode", mode, "simulate|scaling|length");
    geo->add_option("--times", timesSpec, "comma-separated time grid");
    geo->add_option("--s", sArg, "left endpoint for scaling mode");
    geo->add_option("--t", tArg, "right endpoint for scaling mode");
    geo->add_option("--subdivisions", subdivisions, "interval count for length mode");
    add_common(geo, o);

    auto* suite = app.add_subcommand("suite", "run every acceptance criterion");
    add_common(suite, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (t2bar->parsed()) {
            const auto mu = expect_discrete(load_measure(muPath), "--mu");
            const auto nu = expect_discrete(load_measure(nuPath), "--nu");
            SolveOptions opts;
            opts.tol = o.tol;
            opts.maxIter = o.maxIter;
            opts.throwOnNonconvergence = true;
            emit(to_json(t2bar_discrete(mu, nu, opts)), o);
        } else if (t2g->parsed()) {
            const auto mu = expect_gaussian(load_measure(muPath), "--mu");
            const auto nu = expect_gaussian(load_measure(nuPath), "--nu");
            emit(to_json(t2bar_gaussian(mu, nu, gaussian_opts(o, method))), o);
        } else if (pback->parsed()) {
            const auto muAny = load_measure(muPath);
            if (std::holds_alternative<DiscreteMeasure>(muAny)) {
                const auto mu = std::get<DiscreteMeasure>(muAny);
                const auto nu = expect_discrete(load_measure(nuPath), "--nu");
                SolveOptions opts;
                opts.tol = o.tol;
                opts.maxIter = o.maxIter;
                opts.throwOnNonconvergence = true;
                const auto rep = t2bar_discrete(mu, nu, opts);
                const auto proj = backward_projection(rep, mu, nu, std::max(o.tol, 1e-9));
                emit(json{{"value", rep.value}, {"projection", to_json(proj)}}, o);
            } else {
                const auto mu = std::get<GaussianMeasure>(muAny);
                const auto nu = expect_gaussian(load_measure(nuPath), "--nu");
                const auto rep = t2bar_gaussian(mu, nu, gaussian_opts(o, method));
                emit(json{{"value", rep.value}, {"projection", to_json(rep.projection)}}, o);
            }
        } else if (pfwd->parsed()) {
            const auto muAny = load_measure(muPath);
            if (std::holds_alternative<GaussianMeasure>(muAny)) {
                const auto mu = std::get<GaussianMeasure>(muAny);
                const auto nu = expect_gaussian(load_measure(nuPath), "--nu");
                const auto rep = t2bar_gaussian(mu, nu, gaussian_opts(o, method));
                const auto fwd = forward_projection_gaussian(mu, nu, rep);
                if (fwd.residual > std::max(o.tol, 1e-6))
                    throw CheckFailed("forward projection identity residual " +
                                      std::to_string(fwd.residual));
                emit(json{{"value", rep.value},
                          {"nuTilde", to_json(fwd.nuTilde)},
                          {"residual", fwd.residual}},
                     o);
            } else {
                if (gridSpec.empty())
                    throw std::invalid_argument("discrete forward projection needs --grid lo:hi:count");
                double lo, hi;
                int count;
                if (std::sscanf(gridSpec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 ||
                    count < 2 || hi <= lo)
                    throw std::invalid_argument("bad --grid, expected lo:hi:count");
                Eigen::VectorXd grid(count);
                for (int k = 0; k < count; ++k)
                    grid(k) = lo + (hi - lo) * static_cast<double>(k) / (count - 1);
                const auto mu = std::get<DiscreteMeasure>(muAny);
                const auto nu = expect_discrete(load_measure(nuPath), "--nu");
                const auto fwd = forward_projection_grid_1d(mu, nu, grid);
                emit(json{{"value", fwd.value}, {"nuTilde", to_json(fwd.nuTilde)}}, o);
            }
        } else if (order->parsed()) {
            const auto alphaAny = load_measure(alphaPath);
            if (std::holds_alternative<GaussianMeasure>(alphaAny)) {
                const auto a = std::get<GaussianMeasure>(alphaAny);
                const auto b = expect_gaussian(load_measure(betaPath), "--beta");
                emit(json{{"dominated", check_convex_order_gaussian(a, b, std::max(o.tol, 1e-10))}},
                     o);
            } else {
                const auto a = std::get<DiscreteMeasure>(alphaAny);
                const auto b = expect_discrete(load_measure(betaPath), "--beta");
                const auto res = check_convex_order(a, b, std::max(o.tol, 1e-10));
                json j{{"dominated", res.dominated}};
                if (res.witness) {
                    json rows = json::array();
                    for (const auto& row : res.witness->rows()) rows.push_back(to_json(row));
                    j["witness"] = std::move(rows);
                }
                emit(j, o);
            }
        } else if (certify->parsed()) {
            const auto mu = expect_discrete(load_measure(muPath), "--mu");
            const auto nu = expect_discrete(load_measure(nuPath), "--nu");
            SolveOptions opts;
            opts.tol = o.tol;
            opts.maxIter = o.maxIter;
            opts.throwOnNonconvergence = true;
            const auto rep = t2bar_discrete(mu, nu, opts);
            const auto fbar = potential_from_report(rep, mu, nu);
            const double gap = dual_gap(fbar, mu, nu, rep.value);
            const bool saturated = check_equality_barf(fbar, rep.projection, nu,
                                                       std::max(o.tol, 1e-8) * (1.0 + rep.value));
            json j{{"value", rep.value},
                   {"fwGap", rep.fwGap},
                   {"dualGap", gap},
                   {"potential", to_json(fbar)},
                   {"saturationEquality", saturated}};
            emit(j, o);
            if (gap > std::max(o.tol, 1e-6) * (1.0 + rep.value) || !saturated)
                throw CheckFailed("duality certificate failed");
        } else if (paving->parsed()) {
            std::ifstream in(fnPath);
            if (!in) throw std::invalid_argument("cannot open " + fnPath);
            json fj;
            in >> fj;
            const auto f = max_affine_from_json(fj);
            if (!alphaPath.empty() || !betaPath.empty()) {
                if (alphaPath.empty() || betaPath.empty())
                    throw std::invalid_argument("invariance check needs both --alpha and --beta");
                const auto a = expect_discrete(load_measure(alphaPath), "--alpha");
                const auto b = expect_discrete(load_measure(betaPath), "--beta");
                const auto rep = invariance_check(f, a, b, {}, std::max(o.tol, 1e-10), o.seed);
                emit(json{{"hypothesisOk", rep.hypothesisOk},
                          {"hypothesisDetail", rep.hypothesisDetail},
                          {"invariant", rep.invariant},
                          {"worstLeak", rep.worstLeak},
                          {"kernelsChecked", rep.kernelsChecked}},
                     o);
                if (!rep.passed()) throw CheckFailed("invariance check failed");
            } else {
                if (f.dim() != 1)
                    throw std::invalid_argument("cell enumeration is 1D; use --alpha/--beta in d>1");
                json cellsJson = json::array();
                for (const auto& c : cells_1d(f)) {
                    cellsJson.push_back(json{{"anchor", c.anchor},
                                             {"lo", std::isfinite(c.lo) ? json(c.lo) : json("-inf")},
                                             {"hi", std::isfinite(c.hi) ? json(c.hi) : json("inf")},
                                             {"singleton", c.singleton},
                                             {"activeSet", c.activeSet}});
                }
                emit(json{{"cells", std::move(cellsJson)}}, o);
            }
        } else if (geo->parsed()) {
            const auto mu = expect_gaussian(load_measure(muPath), "--mu");
            const auto nu = expect_gaussian(load_measure(nuPath), "--nu");
            const auto rep = t2bar_gaussian(mu, nu, gaussian_opts(o, method));
            if (mode == "simulate") {
                const auto ens = simulate(mu, nu, rep, parse_times(timesSpec), o.samples, o.seed);
                if (!o.out.empty()) write_file(o.out + ".csv", to_csv(ens));
                json j = summary_json(ens);
                const std::string text = canonical_dump(j, o.pretty);
                if (o.out.empty()) std::cout << text;
                else write_file(o.out + ".json", text);
            } else if (mode == "scaling") {
                const auto sc = scaling_check(mu, nu, sArg, tArg, CheckMode::ClosedForm, o.samples,
                                              o.seed, std::max(o.tol, 1e-10));
                emit(json{{"lhs", sc.lhs}, {"rhs", sc.rhs}, {"error", sc.error}, {"ok", sc.ok}}, o);
                if (!sc.ok) throw CheckFailed("scaling identity failed");
            } else if (mode == "length") {
                Eigen::VectorXd sub(subdivisions + 1);
                for (int k = 0; k <= subdivisions; ++k)
                    sub(k) = static_cast<double>(k) / subdivisions;
                const double len = oriented_length(mu, nu, sub);
                const double expect = std::sqrt(rep.value);
                emit(json{{"length", len}, {"sqrtValue", expect}, {"error", std::abs(len - expect)}},
                     o);
                if (std::abs(len - expect) > std::max(o.tol, 1e-8) * (1.0 + expect))
                    throw CheckFailed("length identity failed");
            } else {
                throw std::invalid_argument("unknown geodesic --mode: " + mode);
            }
        } else if (suite->parsed()) {
            const auto results = run_acceptance_suite(o.seed == 0 ? 1 : o.seed, suite_threads());
            json items = json::array();
            bool allPassed = true;
            for (const auto& r : results) {
                std::ostringstream line;
                line << (r.passed ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.name
                     << "  (" << r.detail << ")";
                std::cerr << line.str() << "\n";
                items.push_back(json{{"id", r.id},
                                     {"name", r.name},
                                     {"passed", r.passed},
                                     {"detail", r.detail},
                                     {"seconds", r.seconds}});
                allPassed = allPassed && r.passed;
            }
            emit(json{{"criteria", std::move(items)}, {"allPassed", allPassed}}, o);
            if (!allPassed) throw CheckFailed("acceptance suite failed");
        }
        return 0;
    } catch (const CheckFailed& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
