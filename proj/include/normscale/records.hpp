#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace normscale {

enum class Origin { train, in_test, ood_test };

std::string_view to_string(Origin origin) noexcept;
Origin origin_from_string(std::string_view name);

using ClassIndex = std::size_t;

// One sample's final-layer activations. Labels are optional because OoD
// samples and unlabeled dumps carry none.
struct LogitRecord {
    std::vector<double> logits;
    std::optional<ClassIndex> label;
    Origin origin = Origin::in_test;

    std::size_t width() const noexcept { return logits.size(); }
};

using LogitSet = std::vector<LogitRecord>;

}  // namespace normscale
