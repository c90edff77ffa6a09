// Verification and sampling front end for the ellipmoment library.
//
//   ellipmoment constants --family laplace --dims 1..4
//   ellipmoment moment   --spec moment.json [--seed S] [--samples N]
//   ellipmoment verify   [--seed S] [--samples N] [--out report.json]
//   ellipmoment sample   --spec dist.json --samples N [--seed S] [--out f.csv]
//
// Exit codes: 0 success / all checks pass, 1 verification failure,
// 2 argument or input errors.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ellipmoment/ellipmoment.hpp"

using json = nlohmann::ordered_json;
using namespace ellipmoment;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

EllipticalDistribution dist_from_json(const json& j) {
    auto fam = parse_family(j.at("family").get<std::string>());
    Vector mu = j.at("mu").get<Vector>();
    auto rows = j.at("sigma").get<std::vector<Vector>>();
    if (rows.size() != mu.size())
        throw validity_error("distribution spec: sigma/mu size mismatch");
    SymMatrix s(mu.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != mu.size())
            throw validity_error("distribution spec: sigma not square");
        for (std::size_t k = 0; k <= i; ++k) {
            if (std::abs(rows[i][k] - rows[k][i]) > 1e-12)
                throw validity_error("distribution spec: sigma not symmetric");
            s.set(i, k, rows[i][k]);
        }
    }
    return make_elliptical(mu, s, fam);
}

void write_out(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + out);
    os << text;
}

int cmd_constants(const std::string& family, const std::string& dims,
                  const std::string& out) {
    auto fam = parse_family(family);
    int lo = 0, hi = 0;
    auto dots = dims.find("..");
    if (dots == std::string::npos) {
        lo = hi = std::stoi(dims);
    } else {
        lo = std::stoi(dims.substr(0, dots));
        hi = std::stoi(dims.substr(dots + 2));
    }
    if (lo < 1 || hi < lo)
        throw validity_error("constants: bad --dims range");
    std::ostringstream os;
    os << "family,n,c_n,c_n_star,c_n_dstar,b_star,b_dstar\n";
    for (int n = lo; n <= hi; ++n) {
        auto c = normalizing_constants(fam, n);
        os << fam.name() << ',' << n << ',' << fmt(c.c_n) << ','
           << fmt(c.c_n_star) << ',' << fmt(c.c_n_dstar) << ','
           << fmt(c.b_star) << ',' << fmt(c.b_dstar) << '\n';
    }
    write_out(out, os.str());
    return 0;
}

int cmd_moment(const std::string& spec_path, std::uint64_t seed,
               std::size_t samples, const std::string& out) {
    std::ifstream is(spec_path);
    if (!is) throw std::runtime_error("cannot open spec file: " + spec_path);
    json spec = json::parse(is);
    auto d = dist_from_json(spec.at("distribution"));

    Budget budget;
    budget.seed = seed;
    budget.samples = samples;
    if (spec.value("method", "mc") == std::string("quadrature"))
        budget.method = Budget::Method::Quadrature;

    std::string identity = spec.value("identity", "product");
    MomentEstimate est;
    if (identity == "product") {
        MonomialExponents e{spec.at("exponents").get<std::vector<int>>()};
        est = product_moment(d, e, budget);
    } else if (identity == "x1sq" || identity == "first") {
        // named test functions only; arbitrary f is a library-level feature
        std::string fname = spec.value("f", "gauss");
        SmoothFunction f;
        if (fname == "gauss") {
            f.eval = [](const Vector& x) {
                double r2 = 0.0;
                for (double v : x) r2 += v * v;
                return std::exp(-0.25 * r2);
            };
        } else if (fname == "x2sq") {
            f.eval = [](const Vector& x) {
                return x.size() > 1 ? x[1] * x[1] : x[0] * x[0];
            };
        } else {
            throw validity_error("moment: unknown f name: " + fname);
        }
        est = identity == "x1sq" ? x1sq_moment_thm1(d, f, budget)
                                 : stein_first_moment(d, f, budget);
    } else {
        throw validity_error("moment: unknown identity: " + identity);
    }

    json rep;
    rep["identity"] = identity;
    rep["value"] = json::parse(fmt(est.value));
    rep["std_error"] = json::parse(fmt(est.std_error));
    rep["method"] = est.method;
    if (!est.breakdown.empty()) {
        json b = json::object();
        for (const auto& [k, v] : est.breakdown) b[k] = json::parse(fmt(v));
        rep["breakdown"] = b;
    }
    write_out(out, rep.dump(2) + "\n");
    return 0;
}

int cmd_verify(std::uint64_t seed, std::size_t samples,
               const std::string& out) {
    VerifyOptions opt;
    opt.seed = seed;
    opt.mc_samples = samples;
    opt.cov_draws = samples;
    auto t0 = std::chrono::steady_clock::now();
    auto rep = run_verification(opt);
    auto t1 = std::chrono::steady_clock::now();
    std::chrono::duration<double> dt = t1 - t0;
    std::fprintf(stderr, "verify: %zu checks in %.1f s\n", rep.rows.size(),
                 dt.count());
    write_out(out, rep.to_json());
    return rep.all_pass() ? 0 : 1;
}

int cmd_sample(const std::string& spec_path, std::uint64_t seed,
               std::size_t samples, const std::string& out) {
    std::ifstream is(spec_path);
    if (!is) throw std::runtime_error("cannot open spec file: " + spec_path);
    json spec = json::parse(is);
    auto d = dist_from_json(spec.contains("distribution")
                                ? spec.at("distribution")
                                : spec);
    auto xs = sample(d, seed, samples);
    std::ostringstream os;
    for (std::size_t i = 0; i < d.dim(); ++i)
        os << (i ? ",x" : "x") << i + 1;
    os << '\n';
    for (const auto& x : xs) {
        for (std::size_t i = 0; i < x.size(); ++i)
            os << (i ? "," : "") << fmt(x[i]);
        os << '\n';
    }
    write_out(out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint moments of multivariate elliptical distributions"};
    app.require_subcommand(1);

    std::string family = "normal", dims = "2", spec, out;
    std::uint64_t seed = 42;
    std::size_t samples = 100000;

    auto* c_const = app.add_subcommand("constants",
                                       "normalizing constant table");
    c_const->add_option("--family", family, "family spec");
    c_const->add_option("--dims", dims, "dimension or range a..b");
    c_const->add_option("--out", out, "output path (default stdout)");

    auto* c_moment = app.add_subcommand("moment", "evaluate a moment identity");
    c_moment->add_option("--spec", spec, "moment spec JSON")->required();
    c_moment->add_option("--seed", seed, "RNG seed");
    c_moment->add_option("--samples", samples, "MC sample count");
    c_moment->add_option("--out", out, "output path (default stdout)");

    auto* c_verify = app.add_subcommand("verify", "run the self-check suite");
    c_verify->add_option("--seed", seed, "RNG seed");
    c_verify->add_option("--samples", samples, "MC sample count per check");
    c_verify->add_option("--out", out, "report path (default stdout)");

    auto* c_sample = app.add_subcommand("sample", "write CSV draws");
    c_sample->add_option("--spec", spec, "distribution spec JSON")->required();
    c_sample->add_option("--seed", seed, "RNG seed");
    c_sample->add_option("--samples", samples, "number of draws");
    c_sample->add_option("--out", out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (c_const->parsed()) return cmd_constants(family, dims, out);
        if (c_moment->parsed()) return cmd_moment(spec, seed, samples, out);
        if (c_verify->parsed()) return cmd_verify(seed, samples, out);
        if (c_sample->parsed()) return cmd_sample(spec, seed, samples, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
