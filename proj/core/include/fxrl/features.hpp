#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fxrl/market_data.hpp"

namespace fxrl::features {

inline constexpr std::size_t kFeatureCount = 5;

using FeatureVector = std::array<double, kFeatureCount>;

// Relative-change features of a candle against its predecessor:
//   0: close-to-close change
//   1: high-to-high change
//   2: low-to-low change
//   3: upper wick, (high - close) / close
//   4: lower wick, (close - low) / close
// All five are price ratios, so scaling a series by any positive constant
// leaves them unchanged.
FeatureVector extract_features(const data::Candle& prev, const data::Candle& curr);

// window rows of kFeatureCount values, flat row-major, oldest row first.
// Row k covers the candle pair (t - window + k, t - window + k + 1), so the
// last row ends at candle t.
struct FeatureWindow {
    std::size_t rows = 0;
    std::vector<double> values;

    const double* row(std::size_t k) const { return values.data() + k * kFeatureCount; }
};

FeatureWindow build_window(const data::CandleSeries& series, std::size_t t,
                           std::size_t window);

}
