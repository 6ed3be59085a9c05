#include "raunet/model.hpp"

#include <fstream>

#include <json.hpp>

namespace raunet {

using json = nlohmann::ordered_json;

ModelConfig model_config_from_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is.good()) throw IoError(IoErrorKind::NotFound, "cannot open " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid model config JSON: " + std::string(e.what()));
    }
    ModelConfig cfg;
    if (j.contains("in_bands")) cfg.in_bands = j["in_bands"].get<std::size_t>();
    if (j.contains("num_classes")) cfg.num_classes = j["num_classes"].get<std::size_t>();
    if (j.contains("stage_widths")) cfg.stage_widths = j["stage_widths"].get<std::vector<std::size_t>>();
    if (j.contains("cbam_ratio")) cfg.cbam_ratio = j["cbam_ratio"].get<std::size_t>();
    if (j.contains("spatial_kernel")) cfg.spatial_kernel = j["spatial_kernel"].get<std::size_t>();
    if (j.contains("activation_slope")) cfg.activation_slope = j["activation_slope"].get<double>();
    if (j.contains("residual_blocks")) cfg.residual_blocks = j["residual_blocks"].get<std::size_t>();
    cfg.validate();
    return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
    json j;
    j["in_bands"] = cfg.in_bands;
    j["num_classes"] = cfg.num_classes;
    j["stage_widths"] = cfg.stage_widths;
    j["cbam_ratio"] = cfg.cbam_ratio;
    j["spatial_kernel"] = cfg.spatial_kernel;
    j["activation_slope"] = cfg.activation_slope;
    j["residual_blocks"] = cfg.residual_blocks;
    return j.dump(2);
}

}  // namespace raunet
