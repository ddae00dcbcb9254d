#pragma once

#include "svaro/diagnostics.hpp"
#include "svaro/model.hpp"
#include "svaro/sampler.hpp"
#include "svaro/simulate.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace svaro::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Volumes: <name>.bin holds T x N float64 little-endian values, row-major
// (all voxels of scan 0, then scan 1, ...). <name>.json is the sidecar.
// ---------------------------------------------------------------------------

struct VolumeHeader {
  std::vector<int> dims;
  std::vector<bool> mask;  ///< over the full grid, row-major, last axis fastest
  Index T = 0;
  Index N = 0;
  std::string units;
  std::optional<std::uint64_t> seed;
  std::string config_hash;
};

struct Volume {
  VolumeHeader header;
  Eigen::MatrixXd data;  ///< T x N
};

/// Sidecar path for a payload path: same stem, ".json" extension.
fs::path sidecar_path(const fs::path& payload);

void write_volume(const fs::path& payload, const Eigen::MatrixXd& data, VolumeHeader header);
/// Rejects truncated or oversized payloads, header/payload disagreement and
/// non-finite values (reported with their scan and voxel).
Volume read_volume(const fs::path& payload);

/// "count x value" runs separated by commas, e.g. "3x0,13x1".
std::string encode_mask_rle(const std::vector<bool>& mask);
std::vector<bool> decode_mask_rle(const std::string& rle, std::size_t expected_cells);

LatticeGraph graph_from_header(const VolumeHeader& header);
VolumeHeader header_for(const LatticeGraph& graph, Index T);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Numeric CSV; a first row with any non-numeric field is treated as a
/// header and skipped.
Eigen::MatrixXd read_csv_matrix(const fs::path& path);
void write_csv_matrix(const fs::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});
inline Eigen::MatrixXd read_design(const fs::path& path) { return read_csv_matrix(path); }

// ---------------------------------------------------------------------------
// Maps: <base>.bin (N float64), <base>.csv (voxel, coordinates, value) and
// optionally <base>.pgm, an 8-bit preview normalized to the map's range.
// 3-D grids are tiled slice by slice down the image.
// ---------------------------------------------------------------------------

void write_map(const fs::path& base, const Eigen::VectorXd& values, const LatticeGraph& graph,
               bool pgm_preview);
Eigen::VectorXd read_map_bin(const fs::path& bin, Index N);
std::string pgm_image(const Eigen::VectorXd& values, const LatticeGraph& graph);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string mode = "svaro";  ///< "svaro" or "fixed_order"
  Index P0 = 1;
  std::string volume;
  std::string design;
  std::string output;
  Hyperparams hyper = default_hyperparams(4, 2);
  SamplerConfig sampler;
  SimConfig simulation;
};

/// Parses a JSON document. Unknown keys and wrong types raise SchemaError
/// naming the offending key. Scalars given for beta0/beta1 are broadcast
/// to every order.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const fs::path& path);
/// Canonical JSON (sorted keys), the input to config_hash.
std::string run_config_json(const RunConfig& config);
/// Sets a dotted key ("hyper.P", "sampler.seed", ...) from a string value.
/// The value is read as JSON when it parses, otherwise as a string.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string config_hash(const RunConfig& config);

// ---------------------------------------------------------------------------
// Persistence of simulations and chains
// ---------------------------------------------------------------------------

/// Writes data.bin/.json, design.csv and truth/ under `dir`.
void write_simulation(const fs::path& dir, const Simulation& sim, std::uint64_t seed,
                      const std::string& config_hash);
GroundTruth read_truth(const fs::path& dir);

struct ChainMeta {
  VolumeHeader volume;  ///< T, dims and mask of the fitted data
  std::string mode;
  Index P0 = 0;
  std::string config_hash;
};

/// Writes summary.json plus one CSV per accumulator; stored draws go to
/// binary files. All numbers round-trip exactly.
void write_chain(const fs::path& dir, const ChainOutput& chain, const ChainMeta& meta);
ChainOutput read_chain(const fs::path& dir, ChainMeta* meta = nullptr);

/// Writes `bytes` to a sibling temporary file and renames it into place.
void write_file_atomic(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

}  // namespace svaro::io
