#include "normscale/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "normscale/error.hpp"
#include "normscale/rng.hpp"

namespace normscale {
namespace {

bool valid_normal(const NormalParams& p) {
    return std::isfinite(p.mean) && std::isfinite(p.std) && p.std > 0.0;
}

double draw(DeterministicRng& rng, const NormalParams& p) {
    return static_cast<double>(static_cast<float>(rng.normal(p.mean, p.std)));
}

NormalParams normal_from_json(const nlohmann::json& j) {
    return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

nlohmann::ordered_json normal_to_json(const NormalParams& p) {
    nlohmann::ordered_json j;
    j["mean"] = p.mean;
    j["std"] = p.std;
    return j;
}

}  // namespace

void SynthConfig::validate() const {
    if (own.empty()) fail(ErrorKind::parameter, "synthetic config needs at least one class");
    for (const auto& p : own) {
        if (!valid_normal(p)) fail(ErrorKind::parameter, "class std must be > 0 and finite");
    }
    if (!valid_normal(off) || !valid_normal(ood)) {
        fail(ErrorKind::parameter, "off/ood std must be > 0 and finite");
    }
    if (n_train == 0 || n_in_test == 0 || n_ood_test == 0) {
        fail(ErrorKind::parameter, "sample counts must be >= 1");
    }
}

SynthConfig fig1_like(std::uint64_t seed) {
    SynthConfig c;
    c.own = {{13.0, 2.0}, {20.0, 4.0}, {11.0, 1.5}};
    c.off = {2.0, 1.5};
    c.ood = {10.0, 1.5};
    c.n_train = 5000;
    c.n_in_test = 2000;
    c.n_ood_test = 2000;
    c.seed = seed;
    return c;
}

SynthDataset generate(const SynthConfig& config) {
    config.validate();
    const std::size_t n = config.num_classes();
    DeterministicRng rng(config.seed);

    auto in_dist = [&](std::size_t count, Origin origin) {
        LogitSet out(count);
        for (auto& rec : out) {
            const auto cls = static_cast<ClassIndex>(rng.uniform_index(n));
            rec.origin = origin;
            rec.label = cls;
            rec.logits.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                rec.logits[j] = draw(rng, j == cls ? config.own[j] : config.off);
            }
        }
        return out;
    };

    SynthDataset data;
    data.train = in_dist(config.n_train, Origin::train);
    data.in_test = in_dist(config.n_in_test, Origin::in_test);
    data.ood_test.resize(config.n_ood_test);
    for (auto& rec : data.ood_test) {
        rec.origin = Origin::ood_test;
        rec.logits.resize(n);
        for (auto& z : rec.logits) z = draw(rng, config.ood);
    }
    return data;
}

SynthConfig synth_config_from_json(std::string_view text) {
    SynthConfig c;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& p : doc.at("classes")) c.own.push_back(normal_from_json(p));
        if (doc.contains("num_classes") &&
            doc.at("num_classes").get<std::size_t>() != c.own.size()) {
            fail(ErrorKind::parameter, "num_classes does not match the class list length");
        }
        c.off = normal_from_json(doc.at("off"));
        c.ood = normal_from_json(doc.at("ood"));
        const auto& counts = doc.at("counts");
        c.n_train = counts.at("train").get<std::size_t>();
        c.n_in_test = counts.at("in_test").get<std::size_t>();
        c.n_ood_test = counts.at("ood_test").get<std::size_t>();
        c.seed = doc.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string synth_config_to_json(const SynthConfig& config) {
    nlohmann::ordered_json doc;
    doc["num_classes"] = config.num_classes();
    auto classes = nlohmann::ordered_json::array();
    for (const auto& p : config.own) classes.push_back(normal_to_json(p));
    doc["classes"] = classes;
    doc["off"] = normal_to_json(config.off);
    doc["ood"] = normal_to_json(config.ood);
    doc["counts"] = {{"train", config.n_train},
                     {"in_test", config.n_in_test},
                     {"ood_test", config.n_ood_test}};
    doc["seed"] = config.seed;
    return doc.dump(2) + "\n";
}

SynthConfig read_synth_config(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return synth_config_from_json(buf.str());
}

}  // namespace normscale
