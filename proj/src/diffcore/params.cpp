#include "vdfd/diffcore/params.hpp"

#include <cmath>

#include "vdfd/common.hpp"

namespace vdfd::diff {

ParamRef ParamStore::add(const std::string& name, Shape shape, std::vector<double> data) {
  check(!by_name_.count(name), cat("ParamStore: duplicate parameter '", name, "'"));
  Tensor t = trainable_ ? Tensor::param(shape, std::move(data)) : Tensor::constant(shape, std::move(data));
  const int idx = static_cast<int>(entries_.size());
  entries_.push_back({name, std::move(t)});
  by_name_[name] = idx;
  return ParamRef{idx};
}

ParamRef ParamStore::add_uniform(const std::string& name, Shape shape, double bound, Rng& rng) {
  const auto n = numel(shape);
  std::vector<double> data(static_cast<size_t>(n));
  for (auto& x : data) x = rng.uniform(-bound, bound);
  return add(name, std::move(shape), std::move(data));
}

Tensor ParamStore::get(ParamRef ref) const {
  check(ref.index >= 0 && ref.index < count(), cat("ParamStore: bad ref ", ref.index));
  return entries_[ref.index].tensor;
}

Tensor ParamStore::get(const std::string& name) const { return get(ref(name)); }

ParamRef ParamStore::ref(const std::string& name) const {
  auto it = by_name_.find(name);
  check(it != by_name_.end(), cat("ParamStore: unknown parameter '", name, "'"));
  return ParamRef{it->second};
}

bool ParamStore::has(const std::string& name) const { return by_name_.count(name) > 0; }

void ParamStore::set_data(ParamRef ref, std::vector<double> data) {
  check(ref.index >= 0 && ref.index < count(), cat("ParamStore: bad ref ", ref.index));
  Entry& e = entries_[ref.index];
  check(static_cast<std::int64_t>(data.size()) == numel(e.tensor.shape()),
        cat("ParamStore: size mismatch setting '", e.name, "'"));
  e.tensor = trainable_ ? Tensor::param(e.tensor.shape(), std::move(data))
                        : Tensor::constant(e.tensor.shape(), std::move(data));
}

const std::string& ParamStore::name(int index) const {
  check(index >= 0 && index < count(), "ParamStore: bad index");
  return entries_[index].name;
}

std::uint64_t ParamStore::id_of(ParamRef ref) const { return get(ref).id(); }

std::vector<std::pair<std::string, std::vector<double>>> ParamStore::snapshot() const {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.name, e.tensor.data());
  return out;
}

void ParamStore::load_snapshot(const std::vector<std::pair<std::string, std::vector<double>>>& snap) {
  check(snap.size() == entries_.size(),
        cat("ParamStore: snapshot has ", snap.size(), " entries, store has ", entries_.size()));
  for (const auto& [name, data] : snap) {
    auto r = ref(name);
    set_data(r, data);
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  check(other.count() == count(), "ParamStore: structure mismatch in copy_values_from");
  for (int i = 0; i < count(); ++i) {
    check(other.entries_[i].name == entries_[i].name, "ParamStore: name mismatch in copy_values_from");
    set_data(ParamRef{i}, other.entries_[i].tensor.data());
  }
}

std::int64_t ParamStore::total_elements() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

}  // namespace vdfd::diff
