#include "p2s/core/params.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "p2s/errors.hpp"

namespace p2s::core {

namespace {

constexpr std::array<char, 8> kMagic{'P', '2', 'S', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, double>);
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ParseError("truncated parameter file");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

Tensor ParameterSet::add(std::string name, Tensor t) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  t.set_requires_grad(true);
  entries_.emplace_back(std::move(name), t);
  return t;
}

Tensor& ParameterSet::at(std::string_view name) {
  for (auto& [n, t] : entries_)
    if (n == name) return t;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Tensor& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) throw ShapeError("parameter sets differ in tensor count");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [name, src] = other.entries_[i];
    auto& [dst_name, dst] = entries_[i];
    if (name != dst_name || src.shape() != dst.shape()) {
      throw ShapeError("parameter mismatch: '" + dst_name + "' " + shape_str(dst.shape()) + " vs '" + name + "' " +
                       shape_str(src.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  }
}

void ParameterSet::write(std::ostream& os) const {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, entries_.size());
  for (const auto& [name, t] : entries_) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put<double>(os, v);
  }
  if (!os) throw std::runtime_error("failed writing parameter stream");
}

ParameterSet ParameterSet::read(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw ParseError("not a parameter file (bad magic)");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw ParseError("unsupported parameter file version " + std::to_string(version));
  const auto count = get<std::uint64_t>(is);
  ParameterSet set;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ParseError("truncated parameter name");
    const auto rank = get<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& d : shape) {
      const auto v = get<std::uint64_t>(is);
      if (v == 0 || v > (1ULL << 31)) throw ParseError("invalid dimension in parameter '" + name + "'");
      d = static_cast<int>(v);
    }
    std::vector<double> values(numel(shape));
    for (double& v : values) v = get<double>(is);
    set.add(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return set;
}

void ParameterSet::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write(os);
}

ParameterSet ParameterSet::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read(is);
}

}  // namespace p2s::core
