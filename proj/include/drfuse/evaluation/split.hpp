#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/util/rng.hpp"

namespace drfuse {

/// Positions into the labelled record list, each sorted ascending.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;

    bool operator==(const Split&) const = default;
};

// Per-class quotas are floor(f * n_c) topped up by largest remainder (ties to
// the lower class) until they total round(f * N). Class c shuffles with its own
// stream derive_seed(seed, c).
inline Split stratified_split(std::span<const int> labels, double train_frac, std::uint64_t seed)
{
    if (!(train_frac > 0.0 && train_frac < 1.0))
        fail(Errc::InvalidConfig, "train_frac must be in (0, 1)");
    std::array<std::vector<std::size_t>, kNumClasses> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= kNumClasses)
            fail(Errc::LabelOutOfRange, "label " + std::to_string(labels[i]) + " outside [0, 5)");
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (int c = 0; c < kNumClasses; ++c) {
        const auto n = members[static_cast<std::size_t>(c)].size();
        if (n < 2)
            fail(Errc::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(n) + " record(s); need >= 2");
    }

    const auto target = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(labels.size())));
    std::array<std::size_t, kNumClasses> quota{};
    std::array<double, kNumClasses> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double exact = train_frac * static_cast<double>(members[c].size());
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    std::array<std::size_t, kNumClasses> by_remainder{0, 1, 2, 3, 4};
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < target && k < kNumClasses; ++k) {
        const auto c = by_remainder[k];
        if (quota[c] < members[c].size()) {
            ++quota[c];
            ++assigned;
        }
    }

    Split out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto ids = members[c];
        Rng rng(derive_seed(seed, c));
        rng.shuffle(std::span<std::size_t>(ids));
        out.train.insert(out.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(quota[c]));
        out.validation.insert(out.validation.end(), ids.begin() + static_cast<std::ptrdiff_t>(quota[c]), ids.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

} // namespace drfuse
