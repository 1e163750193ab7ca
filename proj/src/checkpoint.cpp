#include "mvg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mvg {

namespace {

constexpr std::array<char, 4> kMagic{'M', 'V', 'G', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buffer_.insert(buffer_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<char>& buffer() const { return buffer_; }

 private:
  std::vector<char> buffer_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}

  void bytes(void* out, std::size_t n, const char* field) {
    if (data_.size() - pos_ < n) throw CheckpointError(std::string("truncated checkpoint while reading ") + field);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8(const char* field) {
    std::uint8_t v;
    bytes(&v, 1, field);
    return v;
  }
  std::uint32_t u32(const char* field) {
    std::uint32_t v;
    bytes(&v, 4, field);
    return v;
  }
  std::uint64_t u64(const char* field) {
    std::uint64_t v;
    bytes(&v, 8, field);
    return v;
  }
  std::string str(const char* field) {
    const std::uint32_t n = u32(field);
    if (data_.size() - pos_ < n) throw CheckpointError(std::string("truncated checkpoint while reading ") + field);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const RawCheckpoint& checkpoint) {
  const CheckpointMeta& m = checkpoint.meta;
  const ArchitectureConfig& a = m.architecture;
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(a.kind));
  for (std::size_t v : {a.duration_index, a.view_rows, a.view_cols, a.classes, a.filters, a.kernel, a.hidden})
    w.u32(static_cast<std::uint32_t>(v));
  w.u32(m.epochs);
  w.u32(m.batch);
  w.u64(m.train_seed);
  w.u8(m.mean_reduction ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(m.unit));
  w.u64(m.init_seed);
  w.u64(m.corpus_seed);
  w.u32(static_cast<std::uint32_t>(m.classes.size()));
  for (const ClassInfo& c : m.classes) {
    w.str(c.name);
    w.u8(static_cast<std::uint8_t>(c.category));
  }
  w.u32(static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const NamedArray& t : checkpoint.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) w.u32(d);
    w.bytes(t.values.data(), t.values.size() * sizeof(float));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RawCheckpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));

  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw CheckpointError("bad magic in '" + path.string() + "'");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported version " + std::to_string(version) + " in '" + path.string() + "'");

  RawCheckpoint raw;
  CheckpointMeta& m = raw.meta;
  ArchitectureConfig& a = m.architecture;
  const std::uint32_t kind = r.u32("architecture kind");
  if (kind > static_cast<std::uint32_t>(ArchitectureKind::merged_view))
    throw CheckpointError("unknown architecture kind " + std::to_string(kind));
  a.kind = static_cast<ArchitectureKind>(kind);
  a.duration_index = r.u32("duration index");
  a.view_rows = r.u32("view rows");
  a.view_cols = r.u32("view cols");
  a.classes = r.u32("class count");
  a.filters = r.u32("filters");
  a.kernel = r.u32("kernel");
  a.hidden = r.u32("hidden");
  m.epochs = r.u32("epochs");
  m.batch = r.u32("batch");
  m.train_seed = r.u64("train seed");
  m.mean_reduction = r.u8("mean reduction") != 0;
  const std::uint8_t unit = r.u8("iteration unit");
  if (unit > static_cast<std::uint8_t>(IterationUnit::batch))
    throw CheckpointError("unknown iteration unit " + std::to_string(unit));
  m.unit = static_cast<IterationUnit>(unit);
  m.init_seed = r.u64("init seed");
  m.corpus_seed = r.u64("corpus seed");
  const std::uint32_t class_count = r.u32("class list");
  for (std::uint32_t c = 0; c < class_count; ++c) {
    ClassInfo info;
    info.name = r.str("class name");
    const std::uint8_t cat = r.u8("class category");
    if (cat > 1) throw CheckpointError("unknown duration category " + std::to_string(cat));
    info.category = static_cast<DurationCategory>(cat);
    m.classes.push_back(std::move(info));
  }
  if (m.classes.size() != a.classes)
    throw CheckpointError("class list has " + std::to_string(m.classes.size()) + " entries, architecture has " +
                          std::to_string(a.classes));

  const std::uint32_t tensors = r.u32("tensor count");
  for (std::uint32_t i = 0; i < tensors; ++i) {
    NamedArray t;
    t.name = r.str("tensor name");
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank == 0 || rank > 8) throw CheckpointError("bad rank " + std::to_string(rank) + " for '" + t.name + "'");
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32("tensor dims"));
      count *= t.dims.back();
    }
    if (count == 0 || count > (std::size_t{1} << 31))
      throw CheckpointError("bad shape for '" + t.name + "'");
    t.values.resize(count);
    r.bytes(t.values.data(), count * sizeof(float), "tensor values");
    raw.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes in '" + path.string() + "'");
  return raw;
}

}  // namespace mvg
