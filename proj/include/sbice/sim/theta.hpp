#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sbice {

/// Ordered named DGP-parameter assignment.
class ThetaVector {
 public:
  using Entry = std::pair<std::string, double>;

  ThetaVector() = default;
  ThetaVector(std::initializer_list<Entry> entries);

  /// Adds the name, or replaces its value when already present.
  void set(const std::string& name, double value);
  double at(const std::string& name) const;
  std::optional<double> find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name).has_value(); }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> names() const;

  /// ConfigError unless the names are exactly `expected` (order-insensitive)
  /// and every value is finite.
  void require_names(const std::vector<std::string>& expected) const;

  std::string describe() const;

  friend bool operator==(const ThetaVector&, const ThetaVector&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace sbice
