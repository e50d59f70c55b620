#include "gmvp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "gmvp/errors.hpp"

namespace gmvp {

namespace {

constexpr char kMagic[4] = {'G', 'M', 'V', 'P'};

std::uint32_t tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(s[0]) | static_cast<std::uint32_t>(s[1]) << 8 |
         static_cast<std::uint32_t>(s[2]) << 16 | static_cast<std::uint32_t>(s[3]) << 24;
}

class Writer {
 public:
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) u64(d);
    for (double v : t.data()) f64(v);
  }
  void section(std::uint32_t id, const Writer& body) {
    u32(id);
    u64(body.bytes_.size());
    raw(body.bytes_.data(), body.bytes_.size());
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw FormatError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
    p_ += 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += 8;
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  Tensor tensor() {
    const std::uint32_t rank = u32();
    if (rank > 2) throw FormatError("checkpoint tensor has unsupported rank");
    Tensor::Shape shape(rank);
    for (auto& d : shape) d = u64();
    const std::size_t n = shape_size(shape);
    need(n * 8);
    std::vector<double> data(n);
    for (double& v : data) v = f64();
    return Tensor(std::move(shape), std::move(data));
  }
  Reader section(std::uint32_t expected) {
    const std::uint32_t id = u32();
    if (id != expected) throw FormatError("checkpoint section out of order");
    const std::uint64_t len = u64();
    need(len);
    Reader body(p_, len);
    p_ += len;
    return body;
  }
  bool done() const { return p_ == end_; }
  std::string rest() {
    std::string s(reinterpret_cast<const char*>(p_), static_cast<std::size_t>(end_ - p_));
    p_ = end_;
    return s;
  }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  Writer out;
  out.raw(kMagic, 4);
  out.u32(c.version);

  Writer conf;
  const std::string text = to_json(c.config).dump();
  conf.raw(text.data(), text.size());
  out.section(tag("CONF"), conf);

  Writer parm;
  parm.u64(c.params.size());
  for (const auto& [name, t] : c.params) {
    parm.str(name);
    parm.tensor(t);
  }
  out.section(tag("PARM"), parm);

  Writer adam;
  adam.f64(c.adam.lr);
  adam.f64(c.adam.beta1);
  adam.f64(c.adam.beta2);
  adam.f64(c.adam.eps);
  adam.u64(c.adam.step);
  adam.u64(c.adam.m.size());
  for (const auto& [name, t] : c.adam.m) {
    adam.str(name);
    adam.tensor(t);
    adam.tensor(c.adam.v.at(name));
  }
  out.section(tag("ADAM"), adam);

  Writer rng;
  for (std::uint64_t w : c.rng_state) rng.u64(w);
  out.section(tag("RNGS"), rng);

  Writer step;
  step.u64(c.step);
  out.section(tag("STEP"), step);

  auto& bytes = out.bytes();
  out.u32(crc32_of(bytes.data(), bytes.size()));
  return std::move(bytes);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw FormatError("checkpoint is truncated");
  const std::size_t body = bytes.size() - 4;
  Reader trailer(bytes.data() + body, 4);
  if (trailer.u32() != crc32_of(bytes.data(), body)) {
    throw FormatError("checkpoint checksum mismatch (file corrupted or truncated)");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a .gmvp checkpoint");
  Reader in(bytes.data() + 4, body - 4);
  Checkpoint c;
  c.version = in.u32();
  if (c.version != Checkpoint::kFormatVersion) {
    throw FormatError("checkpoint format version " + std::to_string(c.version) +
                      " is not supported (expected " +
                      std::to_string(Checkpoint::kFormatVersion) + ")");
  }

  Reader conf = in.section(tag("CONF"));
  try {
    c.config = train_config_from_json(nlohmann::json::parse(conf.rest()));
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint config section is invalid: ") + e.what());
  }

  Reader parm = in.section(tag("PARM"));
  const std::uint64_t nparams = parm.u64();
  for (std::uint64_t i = 0; i < nparams; ++i) {
    std::string name = parm.str();
    c.params.add(name, parm.tensor());
  }

  Reader adam = in.section(tag("ADAM"));
  c.adam.lr = adam.f64();
  c.adam.beta1 = adam.f64();
  c.adam.beta2 = adam.f64();
  c.adam.eps = adam.f64();
  c.adam.step = adam.u64();
  const std::uint64_t nmoments = adam.u64();
  for (std::uint64_t i = 0; i < nmoments; ++i) {
    std::string name = adam.str();
    Tensor m = adam.tensor();
    Tensor v = adam.tensor();
    c.adam.m.emplace(name, std::move(m));
    c.adam.v.emplace(std::move(name), std::move(v));
  }

  Reader rng = in.section(tag("RNGS"));
  for (auto& w : c.rng_state) w = rng.u64();

  Reader step = in.section(tag("STEP"));
  c.step = step.u64();
  if (!in.done()) throw FormatError("trailing bytes in checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace gmvp
