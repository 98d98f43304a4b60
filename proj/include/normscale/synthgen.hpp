#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "normscale/records.hpp"

namespace normscale {

struct NormalParams {
    double mean = 0.0;
    double std = 1.0;
};

// Class-conditional Gaussian logit model. An in-distribution sample of class
// j draws its own logit from own[j] and every other logit from off; an OoD
// sample draws every logit from ood.
struct SynthConfig {
    std::vector<NormalParams> own;
    NormalParams off;
    NormalParams ood;
    std::size_t n_train = 1;
    std::size_t n_in_test = 1;
    std::size_t n_ood_test = 1;
    std::uint64_t seed = 0;

    std::size_t num_classes() const noexcept { return own.size(); }
    void validate() const;
};

// Three classes peaking at 13, 20 and 11 with an OoD mode near 10.
SynthConfig fig1_like(std::uint64_t seed = 0);

struct SynthDataset {
    LogitSet train;
    LogitSet in_test;
    LogitSet ood_test;
};

// Draws train, then in_test, then ood_test from one generator seeded by
// config.seed. Values are rounded to float so they survive the file formats.
SynthDataset generate(const SynthConfig& config);

SynthConfig synth_config_from_json(std::string_view text);
std::string synth_config_to_json(const SynthConfig& config);
SynthConfig read_synth_config(const std::filesystem::path& path);

}  // namespace normscale
