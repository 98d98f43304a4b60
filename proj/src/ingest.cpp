#include "normscale/ingest.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "normscale/error.hpp"
#include "normscale/rng.hpp"

namespace normscale {
namespace {

constexpr char kMagic[4] = {'O', 'O', 'D', 'L'};
constexpr std::size_t kHeaderSize = 4 + 2 + 8 + 4 + 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
}

template <typename U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        v |= static_cast<U>(static_cast<U>(bytes[offset + i]) << (8 * i));
    }
    return v;
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t col, const std::string& what) {
    fail(ErrorKind::parse, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                               ": " + what);
}

double narrow_logit(double v, std::size_t line, std::size_t col) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(v) || !std::isfinite(f)) parse_fail(line, col, "non-finite logit");
    return static_cast<double>(f);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

void check_label(std::int64_t label, std::size_t width, std::size_t row) {
    if (label < -1 || label >= static_cast<std::int64_t>(width)) {
        fail(ErrorKind::label, "row " + std::to_string(row) + ": label " + std::to_string(label) +
                                   " outside [0, " + std::to_string(width) + ")");
    }
}

void check_uniform_width(std::span<const LogitRecord> records) {
    if (records.empty()) fail(ErrorKind::shape, "cannot write an empty logit set");
    const std::size_t width = records.front().width();
    for (const auto& r : records) {
        if (r.width() != width) fail(ErrorKind::shape, "records differ in width");
        if (r.label && *r.label >= width) fail(ErrorKind::label, "label outside class range");
    }
}

}  // namespace

std::string_view to_string(LogitFormat f) noexcept { return f == LogitFormat::csv ? "csv" : "bin"; }

LogitFormat logit_format_from_string(std::string_view s) {
    if (s == "csv") return LogitFormat::csv;
    if (s == "bin") return LogitFormat::bin;
    fail(ErrorKind::parse, "unknown logit format '" + std::string(s) + "'");
}

LogitFormat logit_format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return LogitFormat::csv;
    if (ext == ".bin") return LogitFormat::bin;
    fail(ErrorKind::parse, "cannot infer logit format from '" + path.string() + "'");
}

LogitSet parse_logits_csv(std::string_view text, Origin origin) {
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool header_seen = false;
    LogitSet out;

    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;

        const auto fields = split_fields(line);
        if (!header_seen) {
            if (trim(fields[0]) != "label" || fields.size() < 2) {
                parse_fail(line_no, 1, "expected header label,z0,...");
            }
            for (std::size_t j = 1; j < fields.size(); ++j) {
                if (trim(fields[j]) != "z" + std::to_string(j - 1)) {
                    parse_fail(line_no, j + 1, "expected column name z" + std::to_string(j - 1));
                }
            }
            width = fields.size() - 1;
            header_seen = true;
            continue;
        }
        if (fields.size() != width + 1) {
            fail(ErrorKind::shape, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(width + 1) + " fields, got " +
                                       std::to_string(fields.size()));
        }

        LogitRecord rec;
        rec.origin = origin;
        rec.logits.resize(width);
        const auto label_text = trim(fields[0]);
        std::int64_t label = 0;
        auto [lp, lec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
        if (lec != std::errc{} || lp != label_text.data() + label_text.size()) {
            parse_fail(line_no, 1, "invalid label '" + std::string(label_text) + "'");
        }
        check_label(label, width, out.size());
        if (label >= 0) rec.label = static_cast<ClassIndex>(label);

        for (std::size_t j = 0; j < width; ++j) {
            const auto f = trim(fields[j + 1]);
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || p != f.data() + f.size()) {
                parse_fail(line_no, j + 2, "invalid number '" + std::string(f) + "'");
            }
            rec.logits[j] = narrow_logit(v, line_no, j + 2);
        }
        out.push_back(std::move(rec));
    }

    if (!header_seen) fail(ErrorKind::parse, "empty logit file");
    if (out.empty()) fail(ErrorKind::parse, "logit file has a header but no rows");
    return out;
}

std::string logits_to_csv(std::span<const LogitRecord> records) {
    check_uniform_width(records);
    const std::size_t width = records.front().width();
    std::string out = "label";
    for (std::size_t j = 0; j < width; ++j) out += ",z" + std::to_string(j);
    out += '\n';
    char buf[40];
    for (const auto& r : records) {
        out += r.label ? std::to_string(*r.label) : "-1";
        for (double z : r.logits) {
            std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(static_cast<float>(z)));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

LogitSet parse_logits_bin(std::span<const std::uint8_t> bytes, Origin origin) {
    if (bytes.empty()) fail(ErrorKind::parse, "empty logit file");
    if (bytes.size() < kHeaderSize) fail(ErrorKind::parse, "offset 0: truncated binary header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::parse, "offset 0: bad magic");

    const auto version = get_le<std::uint16_t>(bytes, 4);
    if (version != kBinaryFormatVersion) {
        fail(ErrorKind::parse, "offset 4: unsupported format version " + std::to_string(version));
    }
    const auto rows = get_le<std::uint64_t>(bytes, 6);
    const auto cols = get_le<std::uint32_t>(bytes, 14);
    const auto has_labels = bytes[18];
    if (has_labels > 1) fail(ErrorKind::parse, "offset 18: label flag must be 0 or 1");
    if (rows == 0 || cols == 0) fail(ErrorKind::parse, "offset 6: binary file holds no logits");

    const std::uint64_t cells = rows * cols;
    if (cells / cols != rows) fail(ErrorKind::parse, "offset 6: row/column count overflow");
    const std::uint64_t expected = kHeaderSize + 4 * cells + (has_labels ? 4 * rows : 0);
    if (bytes.size() != expected) {
        fail(ErrorKind::parse, "binary file is " + std::to_string(bytes.size()) +
                                   " bytes, header implies " + std::to_string(expected));
    }

    LogitSet out(rows);
    std::size_t offset = kHeaderSize;
    for (std::uint64_t i = 0; i < rows; ++i) {
        auto& rec = out[i];
        rec.origin = origin;
        rec.logits.resize(cols);
        for (std::uint32_t j = 0; j < cols; ++j) {
            const float v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
            if (!std::isfinite(v)) {
                fail(ErrorKind::parse, "offset " + std::to_string(offset) + ": non-finite logit");
            }
            rec.logits[j] = v;
            offset += 4;
        }
    }
    if (has_labels) {
        for (std::uint64_t i = 0; i < rows; ++i) {
            const auto label = static_cast<std::int32_t>(get_le<std::uint32_t>(bytes, offset));
            check_label(label, cols, i);
            if (label >= 0) out[i].label = static_cast<ClassIndex>(label);
            offset += 4;
        }
    }
    return out;
}

std::vector<std::uint8_t> logits_to_bin(std::span<const LogitRecord> records) {
    check_uniform_width(records);
    const std::size_t width = records.front().width();
    bool has_labels = false;
    for (const auto& r : records) has_labels = has_labels || r.label.has_value();

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.reserve(kHeaderSize + records.size() * (width + 1) * 4);
    put_le<std::uint16_t>(out, kBinaryFormatVersion);
    put_le<std::uint64_t>(out, records.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(width));
    out.push_back(has_labels ? 1 : 0);
    for (const auto& r : records) {
        for (double z : r.logits) {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(z)));
        }
    }
    if (has_labels) {
        for (const auto& r : records) {
            put_le<std::int32_t>(out, r.label ? static_cast<std::int32_t>(*r.label) : -1);
        }
    }
    return out;
}

LogitSet read_logits(const std::filesystem::path& path, LogitFormat format, Origin origin) {
    const std::string data = read_file(path);
    try {
        if (format == LogitFormat::csv) return parse_logits_csv(data, origin);
        const auto* p = reinterpret_cast<const std::uint8_t*>(data.data());
        return parse_logits_bin({p, data.size()}, origin);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void write_logits(const std::filesystem::path& path, LogitFormat format,
                  std::span<const LogitRecord> records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    if (format == LogitFormat::csv) {
        os << logits_to_csv(records);
    } else {
        const auto bytes = logits_to_bin(records);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
    }
    if (!os) fail(ErrorKind::io, "failed writing " + path.string());
}

const ManifestEntry& DatasetManifest::train() const {
    for (const auto& e : entries) {
        if (e.role == Origin::train) return e;
    }
    fail(ErrorKind::precondition, "manifest has no train entry");
}

const ManifestEntry& DatasetManifest::in_test() const {
    for (const auto& e : entries) {
        if (e.role == Origin::in_test) return e;
    }
    fail(ErrorKind::precondition, "manifest has no in_test entry");
}

std::vector<ManifestEntry> DatasetManifest::ood_tests() const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
        if (e.role == Origin::ood_test) out.push_back(e);
    }
    return out;
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
    std::filesystem::path p(e.path);
    return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate() const {
    std::size_t n_train = 0, n_in = 0, n_ood = 0;
    for (const auto& e : entries) {
        n_train += e.role == Origin::train;
        n_in += e.role == Origin::in_test;
        n_ood += e.role == Origin::ood_test;
    }
    if (n_train != 1 || n_in != 1 || n_ood == 0) {
        fail(ErrorKind::precondition,
             "manifest needs exactly one train entry, one in_test entry and at least one ood_test entry");
    }
    for (const auto& e : entries) {
        if (!std::filesystem::exists(resolve(e))) {
            fail(ErrorKind::io, "manifest entry '" + e.name + "' references missing file " +
                                    resolve(e).string());
        }
    }
}

DatasetManifest manifest_from_json(std::string_view text, std::filesystem::path base_dir) {
    DatasetManifest m;
    m.base_dir = std::move(base_dir);
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& item : doc.at("entries")) {
            ManifestEntry e;
            e.name = item.at("name").get<std::string>();
            e.role = origin_from_string(item.at("role").get<std::string>());
            e.path = item.at("path").get<std::string>();
            e.format = item.contains("format")
                           ? logit_format_from_string(item.at("format").get<std::string>())
                           : logit_format_from_path(e.path);
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("manifest: ") + e.what());
    }
    return m;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::ordered_json item;
        item["name"] = e.name;
        item["role"] = std::string(to_string(e.role));
        item["path"] = e.path;
        item["format"] = std::string(to_string(e.format));
        entries.push_back(std::move(item));
    }
    nlohmann::ordered_json doc;
    doc["entries"] = std::move(entries);
    return doc.dump(2) + "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    return manifest_from_json(read_file(path), path.parent_path());
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    os << manifest_to_json(manifest);
}

LoadedDatasets load_datasets(const DatasetManifest& manifest) {
    manifest.validate();
    LoadedDatasets out;
    const auto& tr = manifest.train();
    out.train = read_logits(manifest.resolve(tr), tr.format, Origin::train);
    const auto& in = manifest.in_test();
    out.in_test = {in.name, read_logits(manifest.resolve(in), in.format, Origin::in_test)};
    for (const auto& e : manifest.ood_tests()) {
        out.ood.push_back({e.name, read_logits(manifest.resolve(e), e.format, Origin::ood_test)});
    }

    out.num_classes = out.train.front().width();
    auto check = [&](const std::string& name, const LogitSet& set) {
        if (set.front().width() != out.num_classes) {
            fail(ErrorKind::shape, "dataset '" + name + "' has " +
                                       std::to_string(set.front().width()) +
                                       " classes, train has " + std::to_string(out.num_classes));
        }
    };
    check(in.name, out.in_test.records);
    for (const auto& o : out.ood) check(o.name, o.records);
    return out;
}

LogitSet build_test_stream(std::span<const LogitRecord> in_test,
                           std::span<const LogitSet> ood_sets, std::uint64_t seed) {
    LogitSet stream(in_test.begin(), in_test.end());
    for (const auto& set : ood_sets) stream.insert(stream.end(), set.begin(), set.end());
    if (stream.empty()) fail(ErrorKind::precondition, "test stream is empty");

    DeterministicRng rng(seed);
    for (std::size_t i = stream.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i + 1));
        std::swap(stream[i], stream[j]);
    }
    return stream;
}

std::string shuffle_generator_id() {
    return std::string(kGeneratorName) + "/fisher-yates/v" + std::to_string(kGeneratorVersion);
}

}  // namespace normscale
