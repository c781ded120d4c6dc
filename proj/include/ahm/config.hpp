#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahm/grid2d.hpp"

namespace ahm {

// Strict view of a JSON config: every key must be read before finish(),
// and type mismatches surface as ConfigError with the key path.
class ConfigNode {
public:
    static ConfigNode parse(const std::string& text);
    static ConfigNode load(const std::string& path);

    bool has(const std::string& key) const;
    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    long integer(const std::string& key) const;
    long integer(const std::string& key, long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
    cplx complex(const std::string& key) const;
    cplx complex(const std::string& key, cplx fallback) const;
    std::vector<cplx> complexes(const std::string& key) const;

    ConfigNode child(const std::string& key) const;
    std::optional<ConfigNode> optional_child(const std::string& key) const;
    std::vector<ConfigNode> children(const std::string& key) const;

    // Throws ConfigError naming the first key that was never read.
    void finish() const;

    const nlohmann::json& json() const { return *node_; }
    const std::string& path() const { return path_; }

private:
    ConfigNode(std::shared_ptr<const nlohmann::json> root, const nlohmann::json* node, std::string path,
               std::shared_ptr<std::set<std::string>> used);
    const nlohmann::json& field(const std::string& key) const;
    std::string key_path(const std::string& key) const;

    std::shared_ptr<const nlohmann::json> root_;
    const nlohmann::json* node_;
    std::string path_;
    std::shared_ptr<std::set<std::string>> used_;
};

}  // namespace ahm
