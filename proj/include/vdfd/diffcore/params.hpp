#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "vdfd/diffcore/rng.hpp"
#include "vdfd/diffcore/tensor.hpp"

namespace vdfd::diff {

struct ParamRef {
  int index = -1;
  bool valid() const { return index >= 0; }
};

// Insertion-ordered registry of named parameter tensors. An update replaces
// the stored tensor with a fresh leaf (tensors themselves stay immutable).
// A store created with trainable=false hands out plain constants — that is
// how target networks are guaranteed to receive no gradient.
class ParamStore {
 public:
  explicit ParamStore(bool trainable = true) : trainable_(trainable) {}

  ParamRef add(const std::string& name, Shape shape, std::vector<double> data);
  // U(-bound, bound) init.
  ParamRef add_uniform(const std::string& name, Shape shape, double bound, Rng& rng);

  Tensor get(ParamRef ref) const;
  Tensor get(const std::string& name) const;
  ParamRef ref(const std::string& name) const;
  bool has(const std::string& name) const;

  void set_data(ParamRef ref, std::vector<double> data);

  int count() const { return static_cast<int>(entries_.size()); }
  const std::string& name(int index) const;
  bool trainable() const { return trainable_; }

  // Maps the current tensor ids back to refs (for consuming GradMaps).
  std::uint64_t id_of(ParamRef ref) const;

  // Deep copies of all parameter values, in insertion order.
  std::vector<std::pair<std::string, std::vector<double>>> snapshot() const;
  // Loads values by name; shapes must match exactly.
  void load_snapshot(const std::vector<std::pair<std::string, std::vector<double>>>& snap);
  // Copies values from a structurally identical store (target refresh).
  void copy_values_from(const ParamStore& other);

  std::int64_t total_elements() const;

 private:
  struct Entry {
    std::string name;
    Tensor tensor;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
  bool trainable_;
};

}  // namespace vdfd::diff
