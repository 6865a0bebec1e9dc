#pragma once

///
/// \file io.hpp
///
/// Coefficient files and CSV rows.
///
/// A coefficient file is line-oriented text:
///
///     # mmg-coefficients 1
///     # problem rl-linear
///     # fingerprint 3b1f0c9a5d2e7784
///     # n 2
///     # d 2
///     # M 6
///     # N 27
///     # ordering graded-lex
///     # domain_lo -1 -1
///     # domain_hi 1 1
///     <N*n coefficients, one per line, c_1 first>
///

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mmg/errors.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/quadrature.hpp"
#include "mmg/residual.hpp"

namespace mmg {

inline constexpr int coefficient_format_version = 1;

class FormatError : public Error
{
public:
    using Error::Error;
};

struct CoefficientFile
{
    std::string problem;
    std::string fingerprint;
    int n = 0;
    int d = 0;
    int M = 0;
    BoxDomain domain;
    Vector c;

    std::size_t N() const { return basis_count(d, M); }
    Eigen::Map<const Matrix> blocks() const
    {
        return {c.data(), static_cast<Eigen::Index>(N()), n};
    }
};

/// Shortest decimal that does not lose bits: 17 significant digits.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError("not a number: '" + std::string(s) + "'");
    return v;
}

inline void write_coefficients(std::ostream& os, const CoefficientFile& f)
{
    const auto N = f.N();
    if (static_cast<std::size_t>(f.c.size()) != N * static_cast<std::size_t>(f.n))
        throw InvalidArgument("write_coefficients: coefficient count does not equal N*n");
    if (f.domain.dim() != f.d)
        throw InvalidArgument("write_coefficients: domain dimension differs from d");
    auto bounds = [&](const std::vector<double>& v) {
        std::string s;
        for (double x : v)
            s += ' ' + format_double(x);
        return s;
    };
    os << "# mmg-coefficients " << coefficient_format_version << '\n'
       << "# problem " << f.problem << '\n'
       << "# fingerprint " << f.fingerprint << '\n'
       << "# n " << f.n << '\n'
       << "# d " << f.d << '\n'
       << "# M " << f.M << '\n'
       << "# N " << N << '\n'
       << "# ordering graded-lex\n"
       << "# domain_lo" << bounds(f.domain.lo) << '\n'
       << "# domain_hi" << bounds(f.domain.hi) << '\n';
    for (Eigen::Index k = 0; k < f.c.size(); ++k)
        os << format_double(f.c(k)) << '\n';
}

inline CoefficientFile read_coefficients(std::istream& is)
{
    CoefficientFile f;
    std::string line;
    int version = -1;
    long N_header = -1;
    std::string ordering;
    std::vector<double> lo, hi, values;
    bool body = false;
    int lineno = 0;

    auto header_ints = [&](std::istringstream& ss, const std::string& key) {
        long v = 0;
        if (!(ss >> v))
            throw FormatError("line " + std::to_string(lineno) + ": bad value for " + key);
        return v;
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            if (body)
                throw FormatError("line " + std::to_string(lineno) + ": header after coefficients");
            std::istringstream ss(line.substr(1));
            std::string key;
            ss >> key;
            if (key == "mmg-coefficients")
                version = static_cast<int>(header_ints(ss, key));
            else if (key == "problem")
                ss >> f.problem;
            else if (key == "fingerprint")
                ss >> f.fingerprint;
            else if (key == "n")
                f.n = static_cast<int>(header_ints(ss, key));
            else if (key == "d")
                f.d = static_cast<int>(header_ints(ss, key));
            else if (key == "M")
                f.M = static_cast<int>(header_ints(ss, key));
            else if (key == "N")
                N_header = header_ints(ss, key);
            else if (key == "ordering")
                ss >> ordering;
            else if (key == "domain_lo" || key == "domain_hi") {
                auto& dst = key == "domain_lo" ? lo : hi;
                std::string tok;
                while (ss >> tok)
                    dst.push_back(parse_double(tok));
            } else
                throw FormatError("line " + std::to_string(lineno) + ": unknown header '" + key + "'");
            continue;
        }
        body = true;
        try {
            values.push_back(parse_double(line));
        } catch (const FormatError&) {
            throw FormatError("line " + std::to_string(lineno) + ": not a number");
        }
    }

    if (version != coefficient_format_version)
        throw FormatError("unsupported or missing format version");
    if (ordering != "graded-lex")
        throw FormatError("unsupported basis ordering '" + ordering + "'");
    if (f.n < 1 || f.d < 1 || f.M < 1)
        throw FormatError("header must give positive n, d and M");
    const auto N = basis_count(f.d, f.M);
    if (N_header >= 0 && static_cast<std::size_t>(N_header) != N)
        throw FormatError("header N = " + std::to_string(N_header) + " but d, M give " +
                          std::to_string(N));
    if (lo.size() != static_cast<std::size_t>(f.d) || hi.size() != static_cast<std::size_t>(f.d))
        throw FormatError("domain bounds must have d entries");
    f.domain = BoxDomain(std::move(lo), std::move(hi));
    if (values.size() != N * static_cast<std::size_t>(f.n))
        throw FormatError("expected " + std::to_string(N * static_cast<std::size_t>(f.n)) +
                          " coefficients, found " + std::to_string(values.size()));
    f.c = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    return f;
}

/// CSV field quoting for values that contain commas or quotes.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + '"';
}

inline constexpr const char* residual_csv_header = "domain,M,n,weighted_norm";

inline std::string residual_csv_row(const BoxDomain& omega, int M, int n, double weighted_norm)
{
    return csv_field(omega.to_string()) + ',' + std::to_string(M) + ',' + std::to_string(n) + ',' +
           format_double(weighted_norm);
}

} // namespace mmg
