#pragma once

///
/// \file polynomial.hpp
///
/// Sparse multivariate polynomials given as (exponent vector, coefficient)
/// tables. Used for problem data supplied as coefficient tables and for
/// exact Galerkin integrals when the signal generator is polynomial.
///

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "mmg/errors.hpp"

namespace mmg {

struct Term
{
    std::vector<int> exponents;
    double coefficient = 0.0;

    friend bool operator==(const Term&, const Term&) = default;
};

class Polynomial
{
public:
    Polynomial() = default;
    Polynomial(int nvars, std::vector<Term> terms) : nvars_(nvars), terms_(std::move(terms))
    {
        if (nvars_ < 0)
            throw InvalidArgument("Polynomial: negative variable count");
        for (const auto& t : terms_) {
            if (static_cast<int>(t.exponents.size()) != nvars_)
                throw InvalidArgument("Polynomial: term has " + std::to_string(t.exponents.size()) +
                                      " exponents, expected " + std::to_string(nvars_));
            for (int e : t.exponents)
                if (e < 0)
                    throw InvalidArgument("Polynomial: negative exponent");
        }
    }

    int nvars() const noexcept { return nvars_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }

    int degree() const
    {
        int deg = 0;
        for (const auto& t : terms_) {
            int s = 0;
            for (int e : t.exponents)
                s += e;
            deg = std::max(deg, s);
        }
        return deg;
    }

    /// Largest exponent of any single variable.
    int max_exponent() const
    {
        int m = 0;
        for (const auto& t : terms_)
            for (int e : t.exponents)
                m = std::max(m, e);
        return m;
    }

    double operator()(std::span<const double> x) const
    {
        double sum = 0.0;
        for (const auto& t : terms_) {
            double v = t.coefficient;
            for (std::size_t j = 0; j < t.exponents.size(); ++j)
                for (int k = 0; k < t.exponents[j]; ++k)
                    v *= x[j];
            sum += v;
        }
        return sum;
    }

    Polynomial derivative(int var) const
    {
        std::vector<Term> out;
        const auto uv = static_cast<std::size_t>(var);
        for (const auto& t : terms_) {
            if (t.exponents[uv] == 0)
                continue;
            Term dt = t;
            dt.coefficient *= t.exponents[uv];
            dt.exponents[uv] -= 1;
            out.push_back(std::move(dt));
        }
        return Polynomial(nvars_, std::move(out));
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    int nvars_ = 0;
    std::vector<Term> terms_;
};

/// One polynomial per output component.
using PolynomialMap = std::vector<Polynomial>;

} // namespace mmg
