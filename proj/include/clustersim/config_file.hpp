#pragma once

// Cluster configuration files (YAML). Keys mirror ClusterConfig:
//
//   preset: Zonl48dobu        # optional starting point
//   name: my-cluster
//   n_cores: 8
//   sequencer: zonl           # base | zonl
//   kernel: zonl-nest         # baseline-loop | inner-frep | zonl-nest
//   fpu_latency: 3
//   unroll: 8
//   branch_penalty: 1
//   arbitration: round-robin  # round-robin | dma-priority | core-priority
//   seed: 1
//   ring_capacity: 32
//   zonl_depth: 2
//   tcdm:
//     total_bytes: 98304
//     n_banks: 48
//     banks_per_hyperbank: 24
//     n_hyperbanks: 2
//     interconnect: dobu      # fc | dobu
//   streams:
//     read_queue_depth: 4
//     mem_latency: 1
//     write_buffer_depth: 7

#include <string>

#include "clustersim/cluster.hpp"

namespace clustersim {

/// Throws ConfigError for unknown keys, bad values or YAML syntax errors.
ClusterConfig parse_config_yaml(const std::string& text);
ClusterConfig load_config_file(const std::string& path);

/// Preset name or path to a YAML file.
ClusterConfig resolve_config(const std::string& preset_or_path);

std::string to_yaml(const ClusterConfig& cfg);

}  // namespace clustersim
