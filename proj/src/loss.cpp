#include "raunet/loss.hpp"

#include <cmath>

#include <json.hpp>

namespace raunet {

using json = nlohmann::ordered_json;

ClassWeights class_weights_from_counts(const std::vector<std::uint64_t>& counts) {
    RAUNET_CHECK(!counts.empty(), "empty class counts");
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    RAUNET_CHECK(total > 0, "total pixel count is zero");
    ClassWeights cw;
    cw.w.resize(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double f = static_cast<double>(counts[c]) / static_cast<double>(total);
        cw.w[c] = 1.0 / std::log(1.02 + f);
    }
    return cw;
}

double omega_weight(std::span<const double> predictions) {
    const double n = static_cast<double>(predictions.size());
    double sum = 0;
    for (double p : predictions) sum += p;
    RAUNET_CHECK(sum > 0, "omega_weight: sum of predictions is zero");
    return (n - sum) / sum;
}

std::string class_weights_to_json(const std::vector<std::string>& class_names, const ClassWeights& w) {
    RAUNET_CHECK(class_names.size() == w.num_classes(), "class name / weight count mismatch");
    json j;
    for (std::size_t c = 0; c < class_names.size(); ++c) j[class_names[c]] = w.w[c];
    return j.dump(2);
}

ClassWeights class_weights_from_json(const std::string& text, const std::vector<std::string>& class_names) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("invalid class weight JSON: " + std::string(e.what()));
    }
    ClassWeights cw;
    cw.w.resize(class_names.size());
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        RAUNET_CHECK(j.contains(class_names[c]), "missing weight for class " << class_names[c]);
        cw.w[c] = j[class_names[c]].get<double>();
        RAUNET_CHECK(cw.w[c] > 0 && std::isfinite(cw.w[c]), "weight for " << class_names[c] << " must be finite and positive");
    }
    return cw;
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "weighted_xent") return LossKind::WeightedXent;
    if (s == "focal") return LossKind::Focal;
    if (s == "dice") return LossKind::Dice;
    if (s == "xent_plus_dice") return LossKind::XentPlusDice;
    throw ConfigError("unknown loss kind: " + s);
}

std::string loss_kind_to_string(LossKind k) {
    switch (k) {
        case LossKind::WeightedXent: return "weighted_xent";
        case LossKind::Focal: return "focal";
        case LossKind::Dice: return "dice";
        case LossKind::XentPlusDice: return "xent_plus_dice";
    }
    return "weighted_xent";
}

}  // namespace raunet
