#pragma once

// Binary container for datasets and trained models.
//
//   "SPAL1" | kind u8 | flags u32 | seed u64 | config_hash u64 |
//   ndims u32 | dims u64 x ndims | float32 payload
//
// Integers and floats are little-endian; matrices are row-major. Payloads:
//   dataset: dims [M, F]; Z, importance (F), p
//   toy:     dims [F, N]; W, b_dec (F)
//   sae:     dims [F_lat, N, k]; W_enc, b_enc, W_dec, b_dec

#include <cstdint>
#include <filesystem>

#include "supalign/datagen.hpp"
#include "supalign/sae.hpp"
#include "supalign/toymodel.hpp"

namespace supalign {

enum class CheckpointKind : std::uint8_t { kDataset = 0, kToyModel = 1, kSae = 2 };

struct CheckpointMeta {
  CheckpointKind kind = CheckpointKind::kDataset;
  std::uint32_t flags = 0;  // bit 0: toy output ReLU
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

void save_dataset(const std::filesystem::path& path, const FeatureDataset& data,
                  std::uint64_t seed = 0, std::uint64_t config_hash = 0);
FeatureDataset load_dataset(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

void save_toy(const std::filesystem::path& path, const ToyModel& model,
              std::uint64_t config_hash = 0);
ToyModel load_toy(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

void save_sae(const std::filesystem::path& path, const SaeModel& sae, std::uint64_t seed = 0,
              std::uint64_t config_hash = 0);
SaeModel load_sae(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

/// Reads only the header.
CheckpointMeta peek_checkpoint(const std::filesystem::path& path);

}  // namespace supalign
