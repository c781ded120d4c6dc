#include "ahm/config.hpp"

#include <fstream>
#include <sstream>

namespace ahm {

using Json = nlohmann::json;

namespace {

cplx to_complex(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(where + ": expected [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

void collect_unused(const Json& j, const std::string& path, const std::set<std::string>& used,
                    std::vector<std::string>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string p = path.empty() ? it.key() : path + "." + it.key();
            if (!used.count(p)) {
                out.push_back(p);
                continue;
            }
            collect_unused(it.value(), p, used, out);
        }
    } else if (j.is_array()) {
        for (std::size_t k = 0; k < j.size(); ++k)
            if (j[k].is_object()) collect_unused(j[k], path + "[" + std::to_string(k) + "]", used, out);
    }
}

}  // namespace

ConfigNode::ConfigNode(std::shared_ptr<const Json> root, const Json* node, std::string path,
                       std::shared_ptr<std::set<std::string>> used)
    : root_(std::move(root)), node_(node), path_(std::move(path)), used_(std::move(used)) {}

ConfigNode ConfigNode::parse(const std::string& text) {
    auto root = std::make_shared<Json>();
    try {
        *root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!root->is_object()) throw ConfigError("config must be a JSON object");
    const Json* node = root.get();
    return ConfigNode(std::move(root), node, "", std::make_shared<std::set<std::string>>());
}

ConfigNode ConfigNode::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ConfigNode::key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool ConfigNode::has(const std::string& key) const { return node_->contains(key); }

const Json& ConfigNode::field(const std::string& key) const {
    if (!node_->contains(key)) throw ConfigError("missing config key " + key_path(key));
    used_->insert(key_path(key));
    return (*node_)[key];
}

double ConfigNode::number(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_number()) throw ConfigError(key_path(key) + ": expected a number");
    return j.get<double>();
}

double ConfigNode::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

long ConfigNode::integer(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_number_integer()) throw ConfigError(key_path(key) + ": expected an integer");
    return j.get<long>();
}

long ConfigNode::integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool ConfigNode::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& j = field(key);
    if (!j.is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
    return j.get<bool>();
}

std::string ConfigNode::string(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_string()) throw ConfigError(key_path(key) + ": expected a string");
    return j.get<std::string>();
}

std::string ConfigNode::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

std::vector<double> ConfigNode::numbers(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const Json& v : j) {
        if (!v.is_number()) throw ConfigError(key_path(key) + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<double> ConfigNode::numbers(const std::string& key, const std::vector<double>& fallback) const {
    return has(key) ? numbers(key) : fallback;
}

cplx ConfigNode::complex(const std::string& key) const { return to_complex(field(key), key_path(key)); }

cplx ConfigNode::complex(const std::string& key, cplx fallback) const { return has(key) ? complex(key) : fallback; }

std::vector<cplx> ConfigNode::complexes(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_array()) throw ConfigError(key_path(key) + ": expected an array of [re, im] pairs");
    std::vector<cplx> out;
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(to_complex(j[k], key_path(key) + "[" + std::to_string(k) + "]"));
    return out;
}

ConfigNode ConfigNode::child(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_object()) throw ConfigError(key_path(key) + ": expected an object");
    return ConfigNode(root_, &j, key_path(key), used_);
}

std::optional<ConfigNode> ConfigNode::optional_child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
}

std::vector<ConfigNode> ConfigNode::children(const std::string& key) const {
    const Json& j = field(key);
    if (!j.is_array()) throw ConfigError(key_path(key) + ": expected an array of objects");
    std::vector<ConfigNode> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string p = key_path(key) + "[" + std::to_string(k) + "]";
        if (!j[k].is_object()) throw ConfigError(p + ": expected an object");
        out.push_back(ConfigNode(root_, &j[k], p, used_));
    }
    return out;
}

void ConfigNode::finish() const {
    std::vector<std::string> unused;
    collect_unused(*node_, path_, *used_, unused);
    if (!unused.empty()) throw ConfigError("unknown config key " + unused.front());
}

}  // namespace ahm
