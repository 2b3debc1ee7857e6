#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acim/dataset.hpp"
#include "acim/engine.hpp"
#include "acim/macro.hpp"
#include "acim/metrics.hpp"
#include "acim/trainer.hpp"

namespace acim::cli {

// Raw `key = value` text as read from the file, keyed by section then key.
// Keys before the first section header live in section "".
struct ConfigEntry {
  std::string value;
  int line = 0;
};

struct ConfigFile {
  std::string origin;  // used in diagnostics
  std::map<std::string, std::map<std::string, ConfigEntry>> sections;
};

ConfigFile parse_config_text(const std::string& text, const std::string& origin);
ConfigFile read_config_file(const std::filesystem::path& path);

struct ModelConfig {
  std::filesystem::path checkpoint;  // empty: use the builtin model
  std::string builtin = "blob_mlp";
  std::vector<std::size_t> hidden{64};
};

struct DataConfig {
  std::string source = "blobs";  // blobs | idx
  BlobSpec blobs;
  int test_per_class = 250;
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};

// Optional sweep axes; an empty list means the axis is fixed at the base
// config value.
struct SweepConfig {
  std::vector<int> adc_bits;
  std::vector<int> enc_bits;
  std::vector<double> random;
  std::vector<double> nonlin;
  std::vector<std::uint64_t> seeds;

  bool empty() const {
    return adc_bits.empty() && enc_bits.empty() && random.empty() && nonlin.empty() &&
           seeds.empty();
  }
};

// Synthetic operands for the csnr / distribution / sparsity commands.
struct OperandConfig {
  std::size_t batch = 16;
  std::size_t inner = 256;
  std::size_t columns = 16;
  int w_bits = 8;
  int x_bits = 8;
  Signedness x_signedness = Signedness::Unsigned;
  std::string distribution = "uniform";  // uniform | gaussian
};

struct OutputConfig {
  std::filesystem::path dir = ".";
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  MacroConfig macro;
  NoiseSpec noise;
  EngineMode mode;
  ModelConfig model;
  DataConfig data;
  TrainConfig train;
  std::filesystem::path train_checkpoint = "model.ckpt";
  std::size_t eval_batch = 64;
  SweepConfig sweep;
  LinearityOptions linearity;
  std::string sparsity_source = "random";  // random | model
  OperandConfig operands;
  OutputConfig output;
  ConfigFile raw;
};

// Converts parsed text into typed settings. Unknown sections or keys,
// malformed values and a missing seed raise ConfigError naming the file,
// line and key. Relative input paths resolve against `base_dir`.
ExperimentConfig build_experiment(const ConfigFile& file, const std::filesystem::path& base_dir);

ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace acim::cli
