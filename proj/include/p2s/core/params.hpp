#pragma once

// Named parameter collections and their binary file format:
//
//   magic    8 bytes  "P2SPARAM"
//   version  u32      1
//   count    u64
//   per tensor:
//     name_len u32, name bytes (UTF-8, no terminator)
//     rank     u32, dims u64 x rank
//     values   f64 x prod(dims)
//
// All integers and floats are little-endian regardless of host order.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "p2s/core/tensor.hpp"

namespace p2s::core {

class ParameterSet {
 public:
  /// Registers a tensor under a unique name and marks it as requiring grad.
  Tensor add(std::string name, Tensor t);

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;

  void zero_grad();

  /// Copies values from `other`; names and shapes must match exactly.
  void assign_values(const ParameterSet& other);

  void write(std::ostream& os) const;
  static ParameterSet read(std::istream& is);

  void save(const std::filesystem::path& path) const;
  static ParameterSet load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace p2s::core
