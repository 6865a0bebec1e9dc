#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// An integer count does not fit the target type.
class Overflow : public Error
{
public:
    using Error::Error;
};

/// A callable produced NaN or Inf. Carries the evaluation point.
class NonFiniteValue : public Error
{
public:
    NonFiniteValue(const std::string& what, std::vector<double> point)
        : Error(what), point_(std::move(point))
    {
    }
    const std::vector<double>& point() const noexcept { return point_; }

private:
    std::vector<double> point_;
};

class SingularMatrix : public Error
{
public:
    using Error::Error;
};

class NotDetectable : public Error
{
public:
    using Error::Error;
};

class UnstableGain : public Error
{
public:
    UnstableGain(const std::string& what, double max_real_part)
        : Error(what), max_real_part_(max_real_part)
    {
    }
    double max_real_part() const noexcept { return max_real_part_; }

private:
    double max_real_part_;
};

/// Input is well-formed but the requested quantity is undefined for it
/// (zero weights, flat signal).
class DegenerateInput : public Error
{
public:
    using Error::Error;
};

class StepSizeUnderflow : public Error
{
public:
    using Error::Error;
};

class NotConverged : public Error
{
public:
    NotConverged(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history))
    {
    }
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

//
// Warnings are advisory and routed through a replaceable sink.
//
using WarningHandler = std::function<void(std::string_view)>;

inline WarningHandler& warning_handler()
{
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

inline void set_warning_handler(WarningHandler h) { warning_handler() = std::move(h); }

inline void warn(std::string_view msg)
{
    if (auto& h = warning_handler())
        h(msg);
}

} // namespace mmg
