#include "mvg/corpus_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <sstream>
#include <vector>

namespace mvg {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kViewMagic{'G', 'L', 'V', '1'};
constexpr std::array<const char*, kViewCount> kViewSuffix{"0.5s", "1s", "2s", "4s"};

static_assert(std::endian::native == std::endian::little, "view files assume a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_view(const fs::path& path, const BasicTensor<float>& view) {
  const Shape& s = view.shape();
  if (s.rank() != 3 || s[0] != 1) throw DimensionError("write_view: expected 1xMxK, got [" + s.to_string() + "]");
  std::ofstream out = open_out(path);
  out.write(kViewMagic.data(), kViewMagic.size());
  put_u32(out, static_cast<std::uint32_t>(s[1]));
  put_u32(out, static_cast<std::uint32_t>(s[2]));
  out.write(reinterpret_cast<const char*>(view.raw()), static_cast<std::streamsize>(view.size() * sizeof(float)));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

BasicTensor<float> read_view(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open view file '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw IoError("truncated view file '" + path.string() + "'");
  if (std::memcmp(bytes.data(), kViewMagic.data(), 4) != 0) throw IoError("bad magic in view file '" + path.string() + "'");
  const auto* header = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = get_u32(header + 4), cols = get_u32(header + 8);
  if (rows == 0 || cols == 0) throw IoError("empty view in '" + path.string() + "'");
  const std::size_t expected = 12 + static_cast<std::size_t>(rows) * cols * sizeof(float);
  if (bytes.size() != expected)
    throw IoError((bytes.size() < expected ? "truncated view file '" : "trailing bytes in view file '") +
                  path.string() + "'");
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  std::memcpy(data.data(), bytes.data() + 12, data.size() * sizeof(float));
  return BasicTensor<float>(Shape{1, rows, cols}, std::move(data));
}

std::string sample_id(std::size_t index) {
  std::ostringstream out;
  out << 's' << std::setw(6) << std::setfill('0') << index;
  return out.str();
}

std::string view_file_name(std::size_t index, std::size_t view) {
  return sample_id(index) + "_" + kViewSuffix.at(view) + ".glv";
}

void export_corpus(const Corpus& corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "views", ec);
  if (ec) throw IoError("cannot create '" + (dir / "views").string() + "': " + ec.message());

  {
    std::ofstream info = open_out(dir / kCorpusInfoName);
    info << "format\tGLV1\n";
    info << "seed\t" << corpus.seed << '\n';
    info << "rows\t" << corpus.geometry.rows << '\n';
    info << "cols\t" << corpus.geometry.cols << '\n';
    for (std::size_t c = 0; c < corpus.classes.size(); ++c)
      info << "class\t" << c << '\t' << corpus.classes[c].name << '\t' << to_string(corpus.classes[c].category)
           << '\n';
    if (!info) throw IoError("write failed for '" + (dir / kCorpusInfoName).string() + "'");
  }

  std::ofstream manifest = open_out(dir / kManifestName);
  manifest << "# sample_id\tclass\tsplit\tview_0.5s\tview_1s\tview_2s\tview_4s\n";
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const MultiViewSample& s = corpus.samples[i];
    manifest << sample_id(i) << '\t' << corpus.classes.at(s.label).name << '\t' << to_string(corpus.splits[i]);
    for (std::size_t v = 0; v < kViewCount; ++v) {
      const std::string rel = "views/" + view_file_name(i, v);
      write_view(dir / rel, s.views[v]);
      manifest << '\t' << rel;
    }
    manifest << '\n';
  }
  if (!manifest) throw IoError("write failed for '" + (dir / kManifestName).string() + "'");
}

Corpus import_corpus(const fs::path& dir) {
  Corpus corpus;
  const fs::path info_path = dir / kCorpusInfoName;
  std::ifstream info(info_path);
  if (!info) throw IoError("cannot open '" + info_path.string() + "'");
  std::map<std::string, std::size_t> class_index;
  std::string line;
  std::size_t line_no = 0;
  auto malformed = [&](const fs::path& p) {
    return IoError("malformed line " + std::to_string(line_no) + " in '" + p.string() + "'");
  };
  try {
    while (std::getline(info, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_tabs(line);
      if (f[0] == "format" && f.size() == 2) {
        if (f[1] != "GLV1") throw IoError("unsupported corpus format '" + f[1] + "' in '" + info_path.string() + "'");
      } else if (f[0] == "seed" && f.size() == 2) {
        corpus.seed = std::stoull(f[1]);
      } else if (f[0] == "rows" && f.size() == 2) {
        corpus.geometry.rows = std::stoul(f[1]);
      } else if (f[0] == "cols" && f.size() == 2) {
        corpus.geometry.cols = std::stoul(f[1]);
      } else if (f[0] == "class" && f.size() == 4) {
        if (std::stoul(f[1]) != corpus.classes.size()) throw malformed(info_path);
        DurationCategory cat;
        if (f[3] == "short") cat = DurationCategory::short_duration;
        else if (f[3] == "long") cat = DurationCategory::long_duration;
        else throw malformed(info_path);
        class_index[f[2]] = corpus.classes.size();
        corpus.classes.push_back({f[2], cat});
      } else {
        throw malformed(info_path);
      }
    }
  } catch (const std::logic_error&) {  // stoul / stoull
    throw malformed(info_path);
  }
  if (corpus.classes.empty()) throw IoError("no classes listed in '" + info_path.string() + "'");

  const fs::path manifest_path = dir / kManifestName;
  std::ifstream manifest(manifest_path);
  if (!manifest) throw IoError("cannot open '" + manifest_path.string() + "'");
  line_no = 0;
  const Shape expected{1, corpus.geometry.rows, corpus.geometry.cols};
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 3 + kViewCount || f[0] != sample_id(corpus.samples.size())) throw malformed(manifest_path);
    const auto cls = class_index.find(f[1]);
    if (cls == class_index.end())
      throw IoError("unknown class '" + f[1] + "' on line " + std::to_string(line_no) + " of '" +
                    manifest_path.string() + "'");
    Split split;
    try {
      split = parse_split(f[2]);
    } catch (const ValidationError&) {
      throw malformed(manifest_path);
    }
    MultiViewSample sample;
    sample.label = cls->second;
    for (std::size_t v = 0; v < kViewCount; ++v) {
      const fs::path view_path = dir / f[3 + v];
      sample.views[v] = read_view(view_path);
      if (!(sample.views[v].shape() == expected))
        throw IoError("view '" + view_path.string() + "' has shape [" + sample.views[v].shape().to_string() +
                      "], corpus expects [" + expected.to_string() + "]");
    }
    corpus.samples.push_back(std::move(sample));
    corpus.splits.push_back(split);
  }
  return corpus;
}

}  // namespace mvg
