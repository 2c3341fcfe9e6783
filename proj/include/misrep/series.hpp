#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "misrep/error.hpp"

namespace misrep {

inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// A finite real-valued time series. Missing entries are stored as NaN.
/// `labels` is either empty (positional index 0..n-1) or holds one label per
/// value (dates, week numbers, ...).
struct Series {
    std::vector<double> values;
    std::vector<std::string> labels;

    Series() = default;
    explicit Series(std::vector<double> v) : values(std::move(v)) {}
    Series(std::vector<double> v, std::vector<std::string> l) : values(std::move(v)), labels(std::move(l)) {}

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> view() const noexcept { return values; }

    std::string label(std::size_t i) const { return labels.empty() ? std::to_string(i) : labels[i]; }

    std::size_t observed_count() const noexcept {
        std::size_t k = 0;
        for (double v : values) k += is_missing(v) ? 0 : 1;
        return k;
    }

    std::vector<double> observed() const {
        std::vector<double> out;
        out.reserve(values.size());
        for (double v : values)
            if (!is_missing(v)) out.push_back(v);
        return out;
    }

    /// Copy with identical labels and new values.
    Series with_values(std::vector<double> v) const { return Series(std::move(v), labels); }
};

inline void check_series(const Series& s) {
    if (s.size() == 0) throw InvalidArgument("series is empty");
    if (!s.labels.empty() && s.labels.size() != s.size())
        throw InvalidArgument("series labels and values differ in length");
    if (s.observed_count() == 0) throw InvalidArgument("series has no observed values");
    for (double v : s.values)
        if (std::isinf(v)) throw InvalidArgument("series contains an infinite value");
}

namespace stats {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Biased (divide-by-n) variance.
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

/// Unbiased (divide-by-(n-1)) standard deviation.
inline double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace stats

}  // namespace misrep
