#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dc/error.hpp"

namespace dc {

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.empty() || truth.empty()) throw InputError("accuracy: empty input");
    if (pred.size() != truth.size())
        throw InputError("accuracy: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " labels");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace dc
