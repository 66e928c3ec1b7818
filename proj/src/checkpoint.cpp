#include "mmhand/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <zlib.h>

#include "mmhand/error.hpp"
#include "mmhand/image.hpp"

namespace mmhand {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'M', 'H', 'F'};

enum class Dtype : uint8_t { F32 = 0, F64 = 1, I64 = 2 };

Dtype dtype_of(const torch::Tensor& t) {
  switch (t.scalar_type()) {
    case torch::kFloat32: return Dtype::F32;
    case torch::kFloat64: return Dtype::F64;
    case torch::kInt64: return Dtype::I64;
    default: fail(ErrorKind::Parameter, "checkpoint: unsupported tensor dtype");
  }
}

torch::ScalarType scalar_of(Dtype d) {
  switch (d) {
    case Dtype::F32: return torch::kFloat32;
    case Dtype::F64: return torch::kFloat64;
    case Dtype::I64: return torch::kInt64;
  }
  fail(ErrorKind::Decode, "checkpoint: unknown dtype tag");
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& b, size_t end) : b_(b), end_(end) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = get<uint32_t>();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  const char* take(size_t n) {
    need(n);
    const char* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  size_t pos() const { return pos_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > end_) fail(ErrorKind::Decode, "checkpoint: truncated file");
  }
  const std::string& b_;
  size_t end_;
  size_t pos_ = 0;
};

}  // namespace

const torch::Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  fail(ErrorKind::Validation, "checkpoint: missing tensor " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& kv : tensors)
    if (kv.first == name) return true;
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out(kMagic, 4);
  put<uint32_t>(out, kCheckpointVersion);
  put_str(out, ck.component);
  put_str(out, ck.config_json);
  put<uint32_t>(out, static_cast<uint32_t>(ck.tensors.size()));
  std::vector<torch::Tensor> flat;
  for (const auto& [name, t] : ck.tensors) {
    put_str(out, name);
    put<uint8_t>(out, static_cast<uint8_t>(dtype_of(t)));
    put<uint32_t>(out, static_cast<uint32_t>(t.dim()));
    for (int64_t d : t.sizes()) put<int64_t>(out, d);
    flat.push_back(t.detach().to(torch::kCPU).contiguous());
  }
  uint64_t blob = 0;
  for (const auto& t : flat) blob += t.numel() * t.element_size();
  put<uint64_t>(out, blob);
  for (const auto& t : flat) out.append(static_cast<const char*>(t.data_ptr()), t.numel() * t.element_size());
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(out.data()), out.size());
  put<uint32_t>(out, static_cast<uint32_t>(crc));
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorKind::Decode,
          "checkpoint: bad magic (not an MMHF file)");
  const size_t body = bytes.size() - 4;
  uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), body);
  require(static_cast<uint32_t>(crc) == stored, ErrorKind::Decode, "checkpoint: checksum mismatch");
  Reader r(bytes, body);
  r.take(4);
  const auto version = r.get<uint32_t>();
  require(version == kCheckpointVersion, ErrorKind::Decode,
          "checkpoint: unsupported format version " + std::to_string(version));
  Checkpoint ck;
  ck.component = r.str();
  ck.config_json = r.str();
  const auto count = r.get<uint32_t>();
  struct Entry {
    std::string name;
    Dtype dtype;
    std::vector<int64_t> shape;
  };
  std::vector<Entry> table;
  for (uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.str();
    e.dtype = static_cast<Dtype>(r.get<uint8_t>());
    const auto nd = r.get<uint32_t>();
    require(nd <= 8, ErrorKind::Decode, "checkpoint: implausible tensor rank");
    for (uint32_t d = 0; d < nd; ++d) {
      e.shape.push_back(r.get<int64_t>());
      require(e.shape.back() >= 0, ErrorKind::Decode, "checkpoint: negative dimension");
    }
    table.push_back(std::move(e));
  }
  const auto blob = r.get<uint64_t>();
  require(r.pos() + blob == body, ErrorKind::Decode, "checkpoint: blob size mismatch");
  for (const auto& e : table) {
    torch::Tensor t = torch::empty(e.shape, scalar_of(e.dtype));
    const size_t n = t.numel() * t.element_size();
    std::memcpy(t.data_ptr(), r.take(n), n);
    ck.tensors.emplace_back(e.name, t);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  atomic_write(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

void add_module(Checkpoint& ck, const torch::nn::Module& m, const std::string& prefix) {
  for (const auto& p : m.named_parameters(true)) ck.tensors.emplace_back(prefix + p.key(), p.value().detach().clone());
  for (const auto& b : m.named_buffers(true)) ck.tensors.emplace_back(prefix + b.key(), b.value().detach().clone());
}

void load_module(const Checkpoint& ck, torch::nn::Module& m, const std::string& prefix) {
  torch::NoGradGuard ng;
  auto copy = [&](const std::string& name, torch::Tensor& dst) {
    const torch::Tensor& src = ck.get(prefix + name);
    require(src.sizes() == dst.sizes() && src.scalar_type() == dst.scalar_type(), ErrorKind::Validation,
            "checkpoint: tensor " + prefix + name + " has a different shape or dtype");
    dst.copy_(src);
  };
  for (auto& p : m.named_parameters(true)) copy(p.key(), p.value());
  for (auto& b : m.named_buffers(true)) copy(b.key(), b.value());
}

}  // namespace mmhand
