#include "intentgc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'I', 'N', 'T', 'E', 'N', 'T', 'G', 'C'};

class Writer {
 public:
  template <class V>
  void pod(V v) {
    char buf[sizeof(V)];
    std::memcpy(buf, &v, sizeof(V));
    out_.append(buf, sizeof(V));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& in, std::size_t end, std::string source) : in_(in), end_(end), source_(std::move(source)) {}
  template <class V>
  V pod() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, in_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw ChecksumError(source_ + ": truncated checkpoint");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
  std::size_t end_;
  std::string source_;
};

std::size_t verified_payload(const std::string& bytes, const std::string& source) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ChecksumError(source + ": not an intentgc checkpoint");
  const std::size_t end = bytes.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + end, 8);
  if (stored != text::fnv1a(std::string_view(bytes.data(), end)))
    throw ChecksumError(source + ": checksum mismatch (file corrupted)");
  return end;
}

}  // namespace

template <class Real>
std::string serialize_checkpoint(const Checkpoint<Real>& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint8_t>(sizeof(Real)));
  w.str(ckpt.config_fingerprint);
  w.str(ckpt.translated_fingerprint);
  w.pod(ckpt.epochs);
  w.str(format_tower_spec(ckpt.model.user.spec));
  w.str(format_tower_spec(ckpt.model.item.spec));
  std::uint32_t count = 0;
  for (Side s : {Side::user, Side::item})
    ckpt.model.tower(s).for_each([&](const std::string&, const Tensor<Real>&) { ++count; });
  w.pod(count);
  for (Side s : {Side::user, Side::item}) {
    ckpt.model.tower(s).for_each([&](const std::string& name, const Tensor<Real>& t) {
      w.str(to_string(s) + "/" + name);
      w.pod(static_cast<std::uint64_t>(t.rows()));
      w.pod(static_cast<std::uint64_t>(t.cols()));
      w.raw(t.data(), t.size() * sizeof(Real));
    });
  }
  std::string& bytes = w.bytes();
  const std::uint64_t sum = text::fnv1a(bytes);
  w.pod(sum);
  return std::move(bytes);
}

template <class Real>
Checkpoint<Real> deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  const std::size_t end = verified_payload(bytes, source);
  Reader r(bytes, end, source);
  char magic[8];
  r.raw(magic, sizeof(magic));
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw SchemaMismatch(source + ": unsupported checkpoint version " + std::to_string(version));
  const auto precision = r.pod<std::uint8_t>();
  if (precision != sizeof(Real))
    throw SchemaMismatch(source + ": checkpoint stores " + std::to_string(precision * 8) + "-bit values, expected " +
                         std::to_string(sizeof(Real) * 8));
  Checkpoint<Real> ckpt;
  ckpt.config_fingerprint = r.str();
  ckpt.translated_fingerprint = r.str();
  ckpt.epochs = r.pod<std::uint64_t>();
  ckpt.model.user = TowerParams<Real>::zeros(parse_tower_spec(r.str()));
  ckpt.model.item = TowerParams<Real>::zeros(parse_tower_spec(r.str()));
  const auto count = r.pod<std::uint32_t>();
  std::uint32_t seen = 0;
  for (Side s : {Side::user, Side::item}) {
    ckpt.model.tower(s).for_each([&](const std::string& name, Tensor<Real>& t) {
      if (seen++ >= count) throw SchemaMismatch(source + ": missing array " + name);
      const std::string stored = r.str();
      const std::string expected = to_string(s) + "/" + name;
      if (stored != expected) throw SchemaMismatch(source + ": expected array " + expected + ", found " + stored);
      const auto rows = r.pod<std::uint64_t>();
      const auto cols = r.pod<std::uint64_t>();
      if (rows != t.rows() || cols != t.cols())
        throw SchemaMismatch(source + ": array " + expected + " has shape " + std::to_string(rows) + "x" +
                             std::to_string(cols));
      r.raw(t.data(), t.size() * sizeof(Real));
    });
  }
  if (seen != count || !r.done()) throw SchemaMismatch(source + ": unexpected trailing arrays");
  return ckpt;
}

template <class Real>
void save_checkpoint(const Checkpoint<Real>& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

namespace {
std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}
}  // namespace

template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint<Real>(read_binary(path), path.string());
}

unsigned checkpoint_precision(const std::filesystem::path& path) {
  const std::string bytes = read_binary(path);
  verified_payload(bytes, path.string());
  return static_cast<unsigned char>(bytes[sizeof(kMagic) + 4]);
}

std::string checkpoint_digest(const std::filesystem::path& path) {
  const std::string bytes = read_binary(path);
  const std::size_t end = verified_payload(bytes, path.string());
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + end, 8);
  return text::hex64(stored);
}

std::optional<CheckpointHeader> peek_checkpoint(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  try {
    const std::string bytes = read_binary(path);
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) return std::nullopt;
    Reader r(bytes, bytes.size(), path.string());
    char magic[8];
    r.raw(magic, sizeof(magic));
    r.pod<std::uint32_t>();
    CheckpointHeader h;
    h.precision = r.pod<std::uint8_t>();
    h.config_fingerprint = r.str();
    h.translated_fingerprint = r.str();
    return h;
  } catch (const Error&) {
    return std::nullopt;
  }
}

template std::string serialize_checkpoint(const Checkpoint<float>&);
template std::string serialize_checkpoint(const Checkpoint<double>&);
template Checkpoint<float> deserialize_checkpoint(const std::string&, const std::string&);
template Checkpoint<double> deserialize_checkpoint(const std::string&, const std::string&);
template void save_checkpoint(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace intentgc
