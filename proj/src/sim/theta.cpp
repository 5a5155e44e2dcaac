#include "sbice/sim/theta.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sbice/errors.hpp"

namespace sbice {

ThetaVector::ThetaVector(std::initializer_list<Entry> entries) {
  for (const auto& [name, value] : entries) set(name, value);
}

void ThetaVector::set(const std::string& name, double value) {
  for (auto& e : entries_) {
    if (e.first == name) {
      e.second = value;
      return;
    }
  }
  entries_.emplace_back(name, value);
}

double ThetaVector::at(const std::string& name) const {
  if (auto v = find(name)) return *v;
  throw ConfigError("parameter '" + name + "' missing from theta " + describe());
}

std::optional<double> ThetaVector::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  return std::nullopt;
}

std::vector<std::string> ThetaVector::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

void ThetaVector::require_names(const std::vector<std::string>& expected) const {
  auto have = names();
  auto want = expected;
  std::sort(have.begin(), have.end());
  std::sort(want.begin(), want.end());
  if (have != want) {
    std::string list;
    for (const auto& w : expected) list += (list.empty() ? "" : ", ") + w;
    throw ConfigError("theta " + describe() + " does not match the declared parameters {" +
                      list + "}");
  }
  for (const auto& [name, value] : entries_) {
    if (!std::isfinite(value)) throw ConfigError("parameter '" + name + "' is not finite");
  }
}

std::string ThetaVector::describe() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) out << ", ";
    out << entries_[i].first << '=' << entries_[i].second;
  }
  out << ')';
  return out.str();
}

}  // namespace sbice
