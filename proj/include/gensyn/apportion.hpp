#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace gensyn {

/// Largest-remainder (Hamilton) apportionment of `total` units proportional
/// to nonnegative weights. Ties in the fractional part are broken by index.
/// The result always sums to exactly `total`.
inline std::vector<long long> largest_remainder(std::span<const double> weights,
                                                long long total) {
    double wsum = 0;
    for (double w : weights) wsum += w;
    std::vector<long long> out(weights.size(), 0);
    if (wsum <= 0 || total <= 0) return out;

    std::vector<double> quota(weights.size());
    long long floor_sum = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        quota[i] = weights[i] / wsum * static_cast<double>(total);
        out[i] = static_cast<long long>(std::floor(quota[i]));
        floor_sum += out[i];
    }
    long long remaining = total - floor_sum;
    std::vector<size_t> idx(weights.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        double fa = quota[a] - std::floor(quota[a]);
        double fb = quota[b] - std::floor(quota[b]);
        if (fa != fb) return fa > fb;
        return a < b;
    });
    for (long long r = 0; r < remaining; ++r) out[idx[r % idx.size()]] += 1;
    return out;
}

} // namespace gensyn
