#include "normscale/error.hpp"
#include "normscale/records.hpp"

#include <string>

namespace normscale {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::fit: return "fit error";
        case ErrorKind::shape: return "shape error";
        case ErrorKind::parameter: return "parameter error";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::metric: return "metric error";
        case ErrorKind::parse: return "parse error";
        case ErrorKind::label: return "label error";
        case ErrorKind::consistency: return "consistency error";
        case ErrorKind::precondition: return "precondition error";
        case ErrorKind::io: return "i/o error";
    }
    return "error";
}

std::string_view to_string(Origin origin) noexcept {
    switch (origin) {
        case Origin::train: return "train";
        case Origin::in_test: return "in_test";
        case Origin::ood_test: return "ood_test";
    }
    return "unknown";
}

Origin origin_from_string(std::string_view name) {
    if (name == "train") return Origin::train;
    if (name == "in_test") return Origin::in_test;
    if (name == "ood_test") return Origin::ood_test;
    fail(ErrorKind::parse, "unknown origin/role '" + std::string(name) + "'");
}

}  // namespace normscale
