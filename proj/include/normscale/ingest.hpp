#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normscale/records.hpp"

namespace normscale {

// Logits are stored as 32-bit floats in both formats; values are narrowed to
// float precision when read so CSV and binary agree exactly.
//
// Binary layout (little endian):
//   "OODL" | u16 version | u64 rows | u32 cols | u8 has_labels
//   | rows*cols f32 logits (row major) | rows i32 labels if has_labels
// CSV layout: header label,z0,...,z{N-1}; label -1 means absent.
enum class LogitFormat { csv, bin };

inline constexpr std::uint16_t kBinaryFormatVersion = 1;

std::string_view to_string(LogitFormat f) noexcept;
LogitFormat logit_format_from_string(std::string_view s);
// Guesses from the file extension (.bin or .csv).
LogitFormat logit_format_from_path(const std::filesystem::path& path);

LogitSet parse_logits_csv(std::string_view text, Origin origin = Origin::in_test);
LogitSet parse_logits_bin(std::span<const std::uint8_t> bytes, Origin origin = Origin::in_test);
std::string logits_to_csv(std::span<const LogitRecord> records);
std::vector<std::uint8_t> logits_to_bin(std::span<const LogitRecord> records);

LogitSet read_logits(const std::filesystem::path& path, LogitFormat format,
                     Origin origin = Origin::in_test);
void write_logits(const std::filesystem::path& path, LogitFormat format,
                  std::span<const LogitRecord> records);

struct ManifestEntry {
    std::string name;
    Origin role = Origin::in_test;
    std::string path;
    LogitFormat format = LogitFormat::bin;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    // Relative entry paths resolve against this directory.
    std::filesystem::path base_dir;

    const ManifestEntry& train() const;
    const ManifestEntry& in_test() const;
    std::vector<ManifestEntry> ood_tests() const;
    std::filesystem::path resolve(const ManifestEntry& e) const;
    void validate() const;
};

DatasetManifest manifest_from_json(std::string_view text, std::filesystem::path base_dir = {});
std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct NamedLogitSet {
    std::string name;
    LogitSet records;
};

struct LoadedDatasets {
    std::size_t num_classes = 0;
    LogitSet train;
    NamedLogitSet in_test;
    std::vector<NamedLogitSet> ood;
};

// Reads every entry and checks that all files share one width.
LoadedDatasets load_datasets(const DatasetManifest& manifest);

// Concatenates then applies a seeded Fisher-Yates shuffle.
LogitSet build_test_stream(std::span<const LogitRecord> in_test,
                           std::span<const LogitSet> ood_sets, std::uint64_t seed);

std::string shuffle_generator_id();

}  // namespace normscale
