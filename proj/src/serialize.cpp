#include <bit>
#include <cstring>
#include <fstream>

#include "kzmps/imps.hpp"

namespace kzmps {

namespace {

constexpr char kMagic[8] = {'K', 'Z', 'M', 'P', 'S', 0, 0, 0};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  void ints(const std::vector<int>& v) {
    put<std::uint64_t>(v.size());
    for (int x : v) put<std::int32_t>(x);
  }
  void doubles(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (double x : v) put(x);
  }
  void spectrum(const SchmidtSpectrum& s) {
    doubles(s.values);
    ints(s.sectors);
    put(s.discarded_weight);
  }
  void tensor(const Tensor& t) {
    put<std::uint64_t>(t.rank());
    for (auto d : t.shape()) put<std::uint64_t>(d);
    for (auto c : t.data()) {
      put(c.real());
      put(c.imag());
    }
  }
  std::vector<std::uint8_t> buf;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  template <class T>
  T get() {
    if (pos + sizeof(T) > bytes.size()) throw InvalidArgument("deserialize: truncated state data");
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::size_t count() {
    const auto n = get<std::uint64_t>();
    if (n > bytes.size()) throw InvalidArgument("deserialize: corrupt length field");
    return static_cast<std::size_t>(n);
  }
  std::vector<int> ints() {
    std::vector<int> v(count());
    for (auto& x : v) x = get<std::int32_t>();
    return v;
  }
  std::vector<double> doubles() {
    std::vector<double> v(count());
    for (auto& x : v) x = get<double>();
    return v;
  }
  SchmidtSpectrum spectrum() {
    SchmidtSpectrum s;
    s.values = doubles();
    s.sectors = ints();
    s.discarded_weight = get<double>();
    return s;
  }
  Tensor tensor() {
    std::vector<std::size_t> shape(count());
    for (auto& d : shape) d = count();
    Tensor t(shape);
    for (auto& c : t.data()) {
      const double re = get<double>();
      const double im = get<double>();
      c = {re, im};
    }
    return t;
  }
  bool done() const { return pos == bytes.size(); }

 private:
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const UniformMPS& mps) {
  static_assert(std::endian::native == std::endian::little, "state files are little endian");
  Writer w;
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put<std::int32_t>(mps.physical_dim);
  w.put<std::int32_t>(mps.charge_modulus);
  w.ints(mps.physical_charges);
  w.spectrum(mps.lambda_a);
  w.spectrum(mps.lambda_b);
  w.tensor(mps.b_a);
  w.tensor(mps.b_b);
  return std::move(w.buf);
}

UniformMPS deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<char>() != c) throw InvalidArgument("deserialize: not a state file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw InvalidArgument("deserialize: unsupported state version " + std::to_string(version));
  UniformMPS mps;
  mps.physical_dim = r.get<std::int32_t>();
  mps.charge_modulus = r.get<std::int32_t>();
  mps.physical_charges = r.ints();
  mps.lambda_a = r.spectrum();
  mps.lambda_b = r.spectrum();
  mps.b_a = r.tensor();
  mps.b_b = r.tensor();
  if (!r.done()) throw InvalidArgument("deserialize: trailing bytes");
  if (mps.b_a.rank() != 3 || mps.b_b.rank() != 3 || mps.b_a.dim(2) != mps.lambda_a.size() ||
      mps.b_b.dim(2) != mps.lambda_b.size()) {
    throw InvalidArgument("deserialize: inconsistent shapes");
  }
  attach_charges(mps);
  return mps;
}

void save_state(const std::filesystem::path& path, const UniformMPS& mps) {
  const auto bytes = serialize(mps);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("save_state: cannot open " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("save_state: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

UniformMPS load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_state: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace kzmps
