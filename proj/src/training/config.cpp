#include "stylestruct/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stylestruct/error.hpp"
#include "stylestruct/image_io.hpp"

namespace stylestruct {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return out;
}

std::string fmt(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "scale", "seed", "batch_size", "lr_fcn", "lr_structure", "lr_style", "lr_joint_style",
        "lr_joint_structure", "lambda", "fcn_weight", "iters_fcn", "iters_structure", "iters_style",
        "iters_style_finetune", "iters_joint", "epochs_fcn", "epochs_structure", "epochs_style",
        "epochs_style_finetune", "epochs_joint", "data_count", "test_count", "codebook_scenes", "out_dir",
        "checkpoint_every", "divergence_ceiling", "divergence_patience", "fcn_eval_every",
        "fcn_target_accuracy"};
    return keys;
}

void TrainConfig::set(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "scale") scale = Scale::parse(v);
    else if (key == "seed") seed = to_u64(key, v);
    else if (key == "batch_size") batch_size = static_cast<Index>(to_u64(key, v));
    else if (key == "lr_fcn") lr_fcn = to_double(key, v);
    else if (key == "lr_structure") lr_structure = to_double(key, v);
    else if (key == "lr_style") lr_style = to_double(key, v);
    else if (key == "lr_joint_style") lr_joint_style = to_double(key, v);
    else if (key == "lr_joint_structure") lr_joint_structure = to_double(key, v);
    else if (key == "lambda") lambda = to_double(key, v);
    else if (key == "fcn_weight") fcn_weight = to_double(key, v);
    else if (key == "iters_fcn") iters_fcn = to_u64(key, v);
    else if (key == "iters_structure") iters_structure = to_u64(key, v);
    else if (key == "iters_style") iters_style = to_u64(key, v);
    else if (key == "iters_style_finetune") iters_style_finetune = to_u64(key, v);
    else if (key == "iters_joint") iters_joint = to_u64(key, v);
    else if (key == "epochs_fcn") epochs_fcn = to_u64(key, v);
    else if (key == "epochs_structure") epochs_structure = to_u64(key, v);
    else if (key == "epochs_style") epochs_style = to_u64(key, v);
    else if (key == "epochs_style_finetune") epochs_style_finetune = to_u64(key, v);
    else if (key == "epochs_joint") epochs_joint = to_u64(key, v);
    else if (key == "data_count") data_count = static_cast<Index>(to_u64(key, v));
    else if (key == "test_count") test_count = static_cast<Index>(to_u64(key, v));
    else if (key == "codebook_scenes") codebook_scenes = static_cast<Index>(to_u64(key, v));
    else if (key == "out_dir") {
        if (v.empty()) throw ConfigError("config key 'out_dir' is empty");
        out_dir = v;
    } else if (key == "checkpoint_every") checkpoint_every = to_u64(key, v);
    else if (key == "divergence_ceiling") divergence_ceiling = to_double(key, v);
    else if (key == "divergence_patience") divergence_patience = to_u64(key, v);
    else if (key == "fcn_eval_every") fcn_eval_every = to_u64(key, v);
    else if (key == "fcn_target_accuracy") fcn_target_accuracy = to_double(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
    if (batch_size < 2 || batch_size % 2 != 0)
        throw ConfigError("batch_size must be an even number >= 2, got " + std::to_string(batch_size));
    for (auto [name, lr] : {std::pair{"lr_fcn", lr_fcn}, {"lr_structure", lr_structure}, {"lr_style", lr_style},
                            {"lr_joint_style", lr_joint_style}, {"lr_joint_structure", lr_joint_structure}})
        if (lr < 0) throw ConfigError(std::string(name) + " must be >= 0");
    if (lambda < 0) throw ConfigError("lambda must be >= 0");
    if (fcn_weight < 0) throw ConfigError("fcn_weight must be >= 0");
    if (data_count < batch_size)
        throw ConfigError("data_count (" + std::to_string(data_count) + ") is smaller than batch_size (" +
                          std::to_string(batch_size) + ")");
    if (test_count <= 0) throw ConfigError("test_count must be positive");
    if (codebook_scenes <= 0) throw ConfigError("codebook_scenes must be positive");
    if (divergence_patience == 0) throw ConfigError("divergence_patience must be positive");
    if (fcn_target_accuracy < 0 || fcn_target_accuracy > 1) throw ConfigError("fcn_target_accuracy must be in [0,1]");
}

std::string TrainConfig::serialize() const {
    std::ostringstream os;
    os << "scale = " << scale.str() << "\n"
       << "seed = " << seed << "\n"
       << "batch_size = " << batch_size << "\n"
       << "lr_fcn = " << fmt(lr_fcn) << "\n"
       << "lr_structure = " << fmt(lr_structure) << "\n"
       << "lr_style = " << fmt(lr_style) << "\n"
       << "lr_joint_style = " << fmt(lr_joint_style) << "\n"
       << "lr_joint_structure = " << fmt(lr_joint_structure) << "\n"
       << "lambda = " << fmt(lambda) << "\n"
       << "fcn_weight = " << fmt(fcn_weight) << "\n"
       << "iters_fcn = " << iters_fcn << "\n"
       << "iters_structure = " << iters_structure << "\n"
       << "iters_style = " << iters_style << "\n"
       << "iters_style_finetune = " << iters_style_finetune << "\n"
       << "iters_joint = " << iters_joint << "\n"
       << "epochs_fcn = " << epochs_fcn << "\n"
       << "epochs_structure = " << epochs_structure << "\n"
       << "epochs_style = " << epochs_style << "\n"
       << "epochs_style_finetune = " << epochs_style_finetune << "\n"
       << "epochs_joint = " << epochs_joint << "\n"
       << "data_count = " << data_count << "\n"
       << "test_count = " << test_count << "\n"
       << "codebook_scenes = " << codebook_scenes << "\n"
       << "checkpoint_every = " << checkpoint_every << "\n"
       << "divergence_ceiling = " << fmt(divergence_ceiling) << "\n"
       << "divergence_patience = " << divergence_patience << "\n"
       << "fcn_eval_every = " << fcn_eval_every << "\n"
       << "fcn_target_accuracy = " << fmt(fcn_target_accuracy) << "\n";
    return os.str();
}

std::uint64_t TrainConfig::hash() const {
    const std::string s = serialize();
    return fnv1a(s.data(), s.size());
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        try {
            base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

}  // namespace stylestruct
