#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvg/glitchgen.hpp"
#include "mvg/model.hpp"
#include "mvg/train.hpp"

namespace mvg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything in a checkpoint except the parameter values.
struct CheckpointMeta {
  ArchitectureConfig architecture;
  std::vector<ClassInfo> classes;
  std::uint64_t init_seed = 0;
  std::uint64_t corpus_seed = 0;
  // Training configuration echo.
  std::uint32_t epochs = 0;
  std::uint32_t batch = 0;
  std::uint64_t train_seed = 0;
  bool mean_reduction = false;
  IterationUnit unit = IterationUnit::epoch;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

/// On-disk layout (all integers little-endian):
///   "MVG1", u32 version
///   u32 kind, duration_index, view_rows, view_cols, classes, filters, kernel, hidden
///   u32 epochs, u32 batch, u64 train_seed, u8 mean_reduction, u8 unit
///   u64 init_seed, u64 corpus_seed
///   u32 class count; per class: u32 length, name bytes, u8 category
///   u32 tensor count; per tensor: u32 name length, name, u32 rank, u32 dims[rank],
///                                 f32 values (row-major)
struct RawCheckpoint {
  CheckpointMeta meta;
  std::vector<NamedArray> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const RawCheckpoint& checkpoint);
RawCheckpoint read_checkpoint(const std::filesystem::path& path);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Model<T>& model, CheckpointMeta meta) {
  meta.architecture = model.config();
  RawCheckpoint raw{std::move(meta), {}};
  for (const Parameter<T>* p : model.parameters()) {
    NamedArray a{p->name, {}, std::vector<float>(p->value.data().begin(), p->value.data().end())};
    for (std::size_t d : p->value.shape().dims()) a.dims.push_back(static_cast<std::uint32_t>(d));
    raw.tensors.push_back(std::move(a));
  }
  write_checkpoint(path, raw);
}

template <typename T>
struct LoadedCheckpoint {
  Model<T> model;
  CheckpointMeta meta;
};

/// Rebuilds the model a checkpoint describes. With `expected`, a checkpoint
/// of a different architecture kind is rejected.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path,
                                    std::optional<ArchitectureKind> expected = std::nullopt) {
  RawCheckpoint raw = read_checkpoint(path);
  if (expected && raw.meta.architecture.kind != *expected)
    throw CheckpointError("architecture mismatch: checkpoint holds " + to_string(raw.meta.architecture.kind) +
                          ", expected " + to_string(*expected));
  Model<T> model(raw.meta.architecture);
  std::vector<Parameter<T>*> params = model.parameters();
  if (params.size() != raw.tensors.size())
    throw CheckpointError("parameter count mismatch: checkpoint has " + std::to_string(raw.tensors.size()) +
                          ", architecture needs " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    NamedArray& a = raw.tensors[i];
    Parameter<T>& p = *params[i];
    if (a.name != p.name)
      throw CheckpointError("parameter name mismatch: '" + a.name + "' where '" + p.name + "' was expected");
    std::vector<std::size_t> dims(a.dims.begin(), a.dims.end());
    if (dims != p.value.shape().dims())
      throw CheckpointError("shape mismatch for '" + a.name + "': expected [" + p.value.shape().to_string() + "]");
    for (std::size_t k = 0; k < a.values.size(); ++k) p.value[k] = static_cast<T>(a.values[k]);
  }
  return {std::move(model), std::move(raw.meta)};
}

}  // namespace mvg
