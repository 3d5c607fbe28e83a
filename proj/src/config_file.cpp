#include "clustersim/config_file.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>

#include <yaml-cpp/yaml.h>

namespace clustersim {

namespace {

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
    if (!node.IsMap()) {
        throw ConfigError(where + " must be a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
    if (const auto v = node[key]) {
        try {
            out = v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(std::string("bad value for '") + key + "'");
        }
    }
}

}  // namespace

ClusterConfig parse_config_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    check_keys(root,
               {"preset", "name", "n_cores", "sequencer", "kernel", "fpu_latency", "unroll", "branch_penalty",
                "arbitration", "seed", "ring_capacity", "zonl_depth", "tcdm", "streams"},
               "config");

    ClusterConfig cfg;
    if (root["preset"]) {
        cfg = ClusterConfig::preset(root["preset"].as<std::string>());
    }
    read(root, "name", cfg.name);
    read(root, "n_cores", cfg.n_cores);
    read(root, "fpu_latency", cfg.fpu_latency);
    read(root, "unroll", cfg.unroll);
    read(root, "branch_penalty", cfg.branch_penalty);
    read(root, "seed", cfg.seed);
    read(root, "ring_capacity", cfg.ring_capacity);
    read(root, "zonl_depth", cfg.zonl_depth);
    if (root["sequencer"]) cfg.sequencer = parse_sequencer_kind(root["sequencer"].as<std::string>());
    if (root["kernel"]) cfg.kernel = parse_variant(root["kernel"].as<std::string>());
    if (root["arbitration"]) cfg.arbitration = parse_policy(root["arbitration"].as<std::string>());

    if (const auto t = root["tcdm"]) {
        check_keys(t, {"total_bytes", "n_banks", "banks_per_hyperbank", "n_hyperbanks", "interconnect"}, "tcdm");
        read(t, "total_bytes", cfg.tcdm.total_bytes);
        read(t, "n_banks", cfg.tcdm.n_banks);
        read(t, "banks_per_hyperbank", cfg.tcdm.banks_per_hyperbank);
        read(t, "n_hyperbanks", cfg.tcdm.n_hyperbanks);
        if (t["interconnect"]) cfg.tcdm.interconnect = parse_interconnect(t["interconnect"].as<std::string>());
    }
    if (const auto s = root["streams"]) {
        check_keys(s, {"read_queue_depth", "mem_latency", "write_buffer_depth"}, "streams");
        read(s, "read_queue_depth", cfg.streams.read_queue_depth);
        read(s, "mem_latency", cfg.streams.mem_latency);
        read(s, "write_buffer_depth", cfg.streams.write_buffer_depth);
    }
    cfg.validate();
    return cfg;
}

ClusterConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot open config file " + path);
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_yaml(ss.str());
}

ClusterConfig resolve_config(const std::string& preset_or_path) {
    for (const auto& n : ClusterConfig::preset_names()) {
        if (n == preset_or_path) {
            return ClusterConfig::preset(n);
        }
    }
    if (std::filesystem::exists(preset_or_path)) {
        return load_config_file(preset_or_path);
    }
    return ClusterConfig::preset(preset_or_path);
}

std::string to_yaml(const ClusterConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.name;
    out << YAML::Key << "n_cores" << YAML::Value << cfg.n_cores;
    out << YAML::Key << "sequencer" << YAML::Value << to_string(cfg.sequencer);
    out << YAML::Key << "kernel" << YAML::Value << to_string(cfg.kernel_variant());
    out << YAML::Key << "fpu_latency" << YAML::Value << cfg.fpu_latency;
    out << YAML::Key << "unroll" << YAML::Value << cfg.unroll;
    out << YAML::Key << "branch_penalty" << YAML::Value << cfg.branch_penalty;
    out << YAML::Key << "arbitration" << YAML::Value << to_string(cfg.arbitration);
    out << YAML::Key << "seed" << YAML::Value << cfg.seed;
    out << YAML::Key << "ring_capacity" << YAML::Value << cfg.ring_capacity;
    out << YAML::Key << "zonl_depth" << YAML::Value << cfg.zonl_depth;
    out << YAML::Key << "tcdm" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "total_bytes" << YAML::Value << cfg.tcdm.total_bytes;
    out << YAML::Key << "n_banks" << YAML::Value << cfg.tcdm.n_banks;
    out << YAML::Key << "banks_per_hyperbank" << YAML::Value << cfg.tcdm.banks_per_hyperbank;
    out << YAML::Key << "n_hyperbanks" << YAML::Value << cfg.tcdm.n_hyperbanks;
    out << YAML::Key << "interconnect" << YAML::Value << to_string(cfg.tcdm.interconnect);
    out << YAML::EndMap;
    out << YAML::Key << "streams" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "read_queue_depth" << YAML::Value << cfg.streams.read_queue_depth;
    out << YAML::Key << "mem_latency" << YAML::Value << cfg.streams.mem_latency;
    out << YAML::Key << "write_buffer_depth" << YAML::Value << cfg.streams.write_buffer_depth;
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace clustersim
