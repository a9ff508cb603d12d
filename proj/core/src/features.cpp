#include "fxrl/features.hpp"

namespace fxrl::features {

FeatureVector extract_features(const data::Candle& prev, const data::Candle& curr) {
    return {
        (curr.close - prev.close) / prev.close,
        (curr.high - prev.high) / prev.high,
        (curr.low - prev.low) / prev.low,
        (curr.high - curr.close) / curr.close,
        (curr.close - curr.low) / curr.close,
    };
}

FeatureWindow build_window(const data::CandleSeries& series, std::size_t t,
                           std::size_t window) {
    if (window == 0) throw data::DataError("build_window: window must be positive");
    if (t < window || t >= series.size())
        throw data::DataError("build_window: index " + std::to_string(t) +
                              " needs window " + std::to_string(window) +
                              " within series of " + std::to_string(series.size()));
    FeatureWindow fw;
    fw.rows = window;
    fw.values.resize(window * kFeatureCount);
    for (std::size_t k = 0; k < window; ++k) {
        const std::size_t i = t - window + k;
        FeatureVector f = extract_features(series[i], series[i + 1]);
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            fw.values[k * kFeatureCount + j] = f[j];
    }
    return fw;
}

}
