#pragma once

#include <filesystem>
#include <string>

#include "mvg/glitchgen.hpp"
#include "mvg/tensor.hpp"

namespace mvg {

// View file: "GLV1", rows (u32 LE), cols (u32 LE), rows*cols f32 LE, row-major.
void write_view(const std::filesystem::path& path, const BasicTensor<float>& view);
BasicTensor<float> read_view(const std::filesystem::path& path);

inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr const char* kCorpusInfoName = "corpus.tsv";

/// Writes the corpus as
///   corpus.tsv    seed, geometry and the class list
///   manifest.tsv  one line per sample: id, class name, split, four view paths
///   views/*.glv   one file per view
void export_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Inverse of export_corpus. Every failure is an IoError naming the file.
Corpus import_corpus(const std::filesystem::path& dir);

std::string sample_id(std::size_t index);
std::string view_file_name(std::size_t index, std::size_t view);

}  // namespace mvg
