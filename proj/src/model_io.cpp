#include "dgcrf/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dgcrf/errors.hpp"

namespace dgcrf {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    out.insert(out.end(), c, c + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  std::vector<unsigned char> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : buf(b) {}
  void bytes(void* p, std::size_t n) {
    if (pos + n > buf.size()) throw IoError("size mismatch: model file is truncated");
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof v);
    if (!std::isfinite(v)) throw IoError("non-finite parameter in model file");
    return v;
  }
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;
};

}  // namespace

std::size_t model_header_bytes(int T) { return sizeof kModelMagic + 5 * 4 + 8 * static_cast<std::size_t>(T); }

std::size_t model_payload_count(const NetworkConfig& c) {
  const std::size_t n = static_cast<std::size_t>(c.d) * c.d;
  std::size_t per_bank = 2 * static_cast<std::size_t>(c.K) * n * n + c.K;
  std::size_t total = per_bank * c.bank_count();
  if (c.has_layer_biases()) total += static_cast<std::size_t>(c.T() - 1) * c.K;
  return total;
}

std::vector<unsigned char> encode_model(const Model& model) {
  model.validate();
  const auto& c = model.config;
  Writer w;
  w.bytes(kModelMagic, sizeof kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(c.d));
  w.u32(static_cast<std::uint32_t>(c.K));
  w.u32(static_cast<std::uint32_t>(c.T()));
  std::uint32_t flags = 0;
  if (c.share_bank) flags |= kFlagShareBank;
  if (c.share_bias) flags |= kFlagShareBias;
  if (c.cascade) flags |= kFlagCascade;
  if (c.softmax == SoftmaxVariant::Normalized) flags |= kFlagSoftmaxNormalized;
  w.u32(flags);
  for (double m : c.schedule.multipliers) w.f64(m);
  for (const auto& bank : model.banks) {
    for (const auto& f : bank.factors_w)
      for (double v : f.flat()) w.f64(v);
    for (const auto& f : bank.factors_psi)
      for (double v : f.flat()) w.f64(v);
    for (double b : bank.biases) w.f64(b);
  }
  for (const auto& lb : model.layer_biases)
    for (double b : lb) w.f64(b);
  return std::move(w.out);
}

Model decode_model(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof kModelMagic || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
    throw IoError("bad magic: not a model file");
  }
  Reader r(bytes);
  r.pos = sizeof kModelMagic;
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw IoError("version mismatch: model file version " + std::to_string(version) + ", expected " +
                  std::to_string(kModelVersion));
  }
  NetworkConfig c;
  c.d = static_cast<int>(r.u32());
  c.K = static_cast<int>(r.u32());
  const std::uint32_t T = r.u32();
  const std::uint32_t flags = r.u32();
  if (c.d < 1 || c.d > 64 || c.K < 1 || c.K > 100000 || T < 1 || T > 64) {
    throw IoError("size mismatch: implausible model dimensions");
  }
  c.share_bank = flags & kFlagShareBank;
  c.share_bias = flags & kFlagShareBias;
  c.cascade = flags & kFlagCascade;
  c.softmax = (flags & kFlagSoftmaxNormalized) ? SoftmaxVariant::Normalized : SoftmaxVariant::Exponential;
  c.schedule.multipliers.resize(T);
  for (auto& m : c.schedule.multipliers) m = r.f64();

  const std::size_t expected = model_header_bytes(static_cast<int>(T)) + 8 * model_payload_count(c);
  if (bytes.size() != expected) {
    throw IoError("size mismatch: model file has " + std::to_string(bytes.size()) + " bytes, header implies " +
                  std::to_string(expected));
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw IoError(std::string("invalid model header: ") + e.what());
  }

  Model m;
  m.config = c;
  const std::size_t n = static_cast<std::size_t>(c.d) * c.d;
  auto read_factor = [&](Matrix& f) {
    f = Matrix(n, n);
    for (auto& v : f.flat()) v = r.f64();
    if (!is_lower_triangular(f)) throw IoError("invalid model: factor has a nonzero upper triangle");
  };
  for (std::size_t b = 0; b < c.bank_count(); ++b) {
    PotentialBank bank(c.d, c.K);
    for (auto& f : bank.factors_w) read_factor(f);
    for (auto& f : bank.factors_psi) read_factor(f);
    for (auto& v : bank.biases) v = r.f64();
    m.banks.push_back(std::move(bank));
  }
  if (c.has_layer_biases()) {
    m.layer_biases.assign(c.T() - 1, std::vector<double>(c.K));
    for (auto& lb : m.layer_biases)
      for (auto& v : lb) v = r.f64();
  }
  m.validate();
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace dgcrf
