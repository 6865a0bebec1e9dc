#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mmg/config.hpp"
#include "mmg/io.hpp"

using namespace mmg;

namespace {

CoefficientFile sample_file(std::mt19937& rng)
{
    CoefficientFile f;
    f.problem = "rl-linear";
    f.fingerprint = "0123456789abcdef";
    f.n = 3;
    f.d = 2;
    f.M = 4;
    f.domain = BoxDomain({-1.5, -2.0}, {1.5, 2.0});
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-300, 300);
    f.c.resize(static_cast<Eigen::Index>(f.N()) * f.n);
    for (auto& v : f.c)
        v = std::ldexp(U(rng), ex(rng) / 10);
    f.c(0) = std::numeric_limits<double>::denorm_min();
    f.c(1) = -0.0;
    f.c(2) = 0.1;
    f.c(3) = std::numeric_limits<double>::max();
    return f;
}

void expect_config_error(const std::string& text, const std::string& field)
{
    try {
        parse_config_text(text);
        FAIL() << "accepted: " << text;
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), field) << e.what();
    }
}

} // namespace

TEST(CoefficientFile, BitExactRoundTrip)
{
    std::mt19937 rng(17);
    for (int t = 0; t < 20; ++t) {
        const auto f = sample_file(rng);
        std::stringstream ss;
        write_coefficients(ss, f);
        const auto g = read_coefficients(ss);
        EXPECT_EQ(g.problem, f.problem);
        EXPECT_EQ(g.fingerprint, f.fingerprint);
        EXPECT_EQ(g.n, f.n);
        EXPECT_EQ(g.d, f.d);
        EXPECT_EQ(g.M, f.M);
        EXPECT_EQ(g.domain, f.domain);
        ASSERT_EQ(g.c.size(), f.c.size());
        for (Eigen::Index k = 0; k < f.c.size(); ++k)
            EXPECT_EQ(std::bit_cast<std::uint64_t>(g.c(k)), std::bit_cast<std::uint64_t>(f.c(k))) << k;
    }
}

TEST(CoefficientFile, BlocksView)
{
    std::mt19937 rng(18);
    const auto f = sample_file(rng);
    const auto B = f.blocks();
    EXPECT_EQ(B.rows(), 14);
    EXPECT_EQ(B.cols(), 3);
    EXPECT_EQ(B(0, 1), f.c(14));
}

TEST(CoefficientFile, Test1LayoutIsTwoBlocksOfFive)
{
    CoefficientFile f;
    f.problem = "test1";
    f.fingerprint = "x";
    f.n = 2;
    f.d = 2;
    f.M = 2;
    f.domain = BoxDomain::symmetric(2, 1.0);
    f.c = Vector::LinSpaced(10, 1.0, 10.0);
    std::stringstream ss;
    write_coefficients(ss, f);
    const std::string text = ss.str();
    EXPECT_NE(text.find("# N 5\n"), std::string::npos);
    EXPECT_NE(text.find("# ordering graded-lex\n"), std::string::npos);
    EXPECT_NE(text.find("# domain_lo -1 -1\n"), std::string::npos);
}

TEST(CoefficientFile, RejectsMalformedInput)
{
    std::mt19937 rng(19);
    const auto f = sample_file(rng);
    std::stringstream ss;
    write_coefficients(ss, f);
    const std::string good = ss.str();

    auto reject = [](const std::string& text) {
        std::istringstream in(text);
        EXPECT_THROW(read_coefficients(in), FormatError) << text.substr(0, 80);
    };
    reject(good.substr(0, good.rfind('\n', good.size() - 2) + 1));  // missing last value
    reject(good + "1.0\n");                                       // extra value
    reject("# mmg-coefficients 2\n" + good.substr(good.find('\n') + 1)); // version
    std::string bad_num = good;
    bad_num.replace(bad_num.rfind('\n', bad_num.size() - 2) + 1, 3, "abc");
    reject(bad_num);
    std::string bad_order = good;
    bad_order.replace(bad_order.find("graded-lex"), 10, "colex");
    reject(bad_order);
    reject(good + "# n 3\n");
    EXPECT_THROW(write_coefficients(ss, CoefficientFile{}), InvalidArgument);
}

TEST(ParseDouble, Strict)
{
    EXPECT_EQ(parse_double(" 1.5 "), 1.5);
    EXPECT_EQ(parse_double("+2"), 2.0);
    EXPECT_THROW(parse_double("1.5x"), FormatError);
    EXPECT_THROW(parse_double(""), FormatError);
}

TEST(ResidualCsv, Row)
{
    EXPECT_EQ(residual_csv_row(BoxDomain::symmetric(2, 1.0), 6, 2, 7.0587e-7), "\"[-1,1]x[-1,1]\",6,2,7.0587000000000001e-07");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\", ok"), "\"say \"\"hi\"\", ok\"");
}

TEST(Config, DefaultsForBuiltin)
{
    const auto cfg = parse_config_text(R"({"problem": {"builtin": "rl-linear"}})");
    EXPECT_EQ(cfg.problem.builtin, "rl-linear");
    EXPECT_EQ(cfg.problem.params.at("n"), 2.0);
    EXPECT_EQ(cfg.degree, 6);
    EXPECT_EQ(cfg.domain, BoxDomain::symmetric(2, 1.0));
    EXPECT_EQ(cfg.residual.W, BoxDomain::symmetric(2, 0.7));
    EXPECT_EQ(cfg.output_dir, "out");
    const auto pb = build_problem(cfg.problem);
    EXPECT_EQ(pb.system.n, 2);
    EXPECT_EQ(resolve_gain(cfg, pb).kind, GainKind::test3);
}

TEST(Config, RoundTrip)
{
    const std::string text = R"({
      "problem": {"builtin": "rl-vdp", "params": {"n": 5, "mu": 0.3}},
      "domain": {"lo": [-2, -2], "hi": [2, 2]},
      "degree": 4,
      "quadrature": 12,
      "solver": {"tol_F_l1": 1e-8, "max_iter": 50, "backend": "dense_lu", "divergence_factor": 1e6},
      "rom": {"gain": {"kind": "test4", "c": 5, "mu": 0.3}, "w0": [0.2, 0.1], "r0": [0, 0.5]},
      "simulation": {"t_end": 20, "method": "fixed_rk4", "fixed_step": 0.01},
      "residual": {"lo": [-1, -1], "hi": [1, 1], "q": 16},
      "output_dir": "runs/vdp"
    })";
    const auto a = parse_config_text(text);
    const auto b = parse_config(to_json(a));
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(a.solver.max_iter, 50);
    EXPECT_EQ(a.solver.backend, LinearBackend::dense_lu);
    EXPECT_EQ(a.simulation.method, IntegrationMethod::fixed_rk4);
    EXPECT_EQ(a.residual.q, 16);
    EXPECT_EQ(problem_fingerprint(a.problem), problem_fingerprint(b.problem));
}

TEST(Config, InfiniteDivergenceFactorSerializesAsNull)
{
    const auto cfg = parse_config_text(R"({"problem": {"builtin": "test1"}})");
    const auto j = to_json(cfg);
    EXPECT_TRUE(j.at("solver").at("divergence_factor").is_null());
    EXPECT_TRUE(std::isinf(parse_config(j).solver.divergence_factor));
}

TEST(Config, GenericProblem)
{
    const std::string text = R"({
      "problem": {"generic": {
        "name": "scalar-lag", "d": 2, "n": 1, "m": 1, "p": 1,
        "s": [[{"exponents": [0, 1], "coefficient": 1}], [{"exponents": [1, 0], "coefficient": -1}]],
        "ell": [[{"exponents": [1, 0], "coefficient": 1}]],
        "f": [[{"exponents": [1, 0], "coefficient": -1}, {"exponents": [0, 1], "coefficient": 1}]],
        "h": [[{"exponents": [1], "coefficient": 1}]]
      }},
      "degree": 2
    })";
    const auto cfg = parse_config_text(text);
    const auto pb = build_problem(cfg.problem);
    EXPECT_EQ(pb.system.n, 1);
    EXPECT_EQ(problem_label(cfg.problem), "scalar-lag");
    EXPECT_NEAR(pb.system.f(Vector{{2.0}}, Vector{{0.5}})(0), -1.5, 1e-15);
    EXPECT_EQ(resolve_gain(cfg, pb).kind, GainKind::constant_matrix);
    EXPECT_EQ(to_json(parse_config(to_json(cfg))).dump(), to_json(cfg).dump());
}

TEST(Config, FingerprintDistinguishesParameters)
{
    const auto a = parse_config_text(R"({"problem": {"builtin": "test1", "params": {"a": 2}}})");
    const auto b = parse_config_text(R"({"problem": {"builtin": "test1", "params": {"a": 3}}})");
    const auto c = parse_config_text(R"({"problem": {"builtin": "test1"}, "degree": 3})");
    EXPECT_NE(problem_fingerprint(a.problem), problem_fingerprint(b.problem));
    EXPECT_EQ(problem_fingerprint(a.problem), problem_fingerprint(c.problem));
    EXPECT_EQ(problem_fingerprint(a.problem).size(), 16u);
}

TEST(Config, RejectsWithFieldPath)
{
    expect_config_error(R"({"problem": {"builtin": "test1"}, "solver": {"tolerance": 1}})", "solver.tolerance");
    expect_config_error(R"({"problem": {"builtin": "nope"}})", "problem.builtin");
    expect_config_error(R"({"problem": {"builtin": "test1", "params": {"b": 1}}})", "problem.params.b");
    expect_config_error(R"({"problem": {"builtin": "rl-linear", "params": {"n": 2.5}}})", "problem.params.n");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "degree": 0})", "degree");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "domain": {"lo": [1, -1], "hi": [0, 1]}})", "domain");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "domain": {"lo": [-1], "hi": [1]}})", "domain");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "rom": {"gain": {"kind": "magic"}}})", "rom.gain.kind");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "solver": {"backend": "qr"}})", "solver.backend");
    expect_config_error(R"({"degree": 2})", "problem");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "simulation": {"method": "euler"}})",
                        "simulation.method");
    expect_config_error(R"({"problem": {"builtin": "test1"}, "rom": {"w0": [1, 2, 3]}})", "rom.w0");
}

TEST(Config, RejectsMalformedJson)
{
    EXPECT_THROW(parse_config_text("{"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.json"), ConfigError);
}
