#pragma once

// Text checkpoint of named matrices:
//
//   subtext-checkpoint 1
//   <count>
//   <name> <rows> <cols>
//   <rows*cols values, %.17g, space separated>
//   ...
//
// Values round-trip exactly.

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subtext/numerics.hpp"
#include "subtext/relation.hpp"

namespace subtext {

inline constexpr const char* kCheckpointMagic = "subtext-checkpoint";
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline void write_checkpoint(std::ostream& out, const NamedTensors& tensors) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n' << tensors.size() << '\n';
  char buf[40];
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw CheckpointError("checkpoint: invalid tensor name '" + name + "'");
    }
    out << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
}

inline NamedTensors read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw CheckpointError("checkpoint: bad header");
  }
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  if (!(in >> count)) throw CheckpointError("checkpoint: missing tensor count");
  NamedTensors out;
  for (std::size_t k = 0; k < count; ++k) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) throw CheckpointError("checkpoint: truncated tensor header");
    std::vector<double> v(rows * cols);
    for (double& x : v) {
      std::string tok;
      if (!(in >> tok)) throw CheckpointError("checkpoint: truncated values for " + name);
      try {
        std::size_t used = 0;
        x = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw CheckpointError("checkpoint: bad value '" + tok + "' in " + name);
      }
    }
    out.emplace_back(name, Tensor(rows, cols, std::move(v)));
  }
  return out;
}

inline NamedTensors relation_tensors(const RelationBlockParams& p) {
  NamedTensors out;
  for (std::size_t m = 0; m < p.heads.size(); ++m) {
    const std::string h = "head" + std::to_string(m) + ".";
    out.emplace_back(h + "query", p.heads[m].query.value);
    out.emplace_back(h + "key", p.heads[m].key.value);
    out.emplace_back(h + "value", p.heads[m].value.value);
    out.emplace_back(h + "geometry", p.heads[m].geometry.value);
  }
  return out;
}

// Dimensions are recovered from the stored shapes; geometry encoding
// constants other than its width come from `geometry`.
inline RelationBlockParams relation_from_tensors(const NamedTensors& tensors,
                                                 const GeometryEncodingConfig& geometry = {}) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [n, t] : tensors) by_name[n] = &t;
  auto get = [&](const std::string& n) -> const Tensor& {
    auto it = by_name.find(n);
    if (it == by_name.end()) throw CheckpointError("checkpoint: missing tensor " + n);
    return *it->second;
  };
  std::size_t heads = 0;
  while (by_name.count("head" + std::to_string(heads) + ".query")) ++heads;
  if (heads == 0) throw CheckpointError("checkpoint: no relation heads");
  RelationBlockParams p;
  const Tensor& q0 = get("head0.query");
  const Tensor& v0 = get("head0.value");
  p.config.heads = heads;
  p.config.feature_dim = q0.cols();
  p.config.key_dim = q0.rows();
  p.config.value_dim = v0.rows();
  p.config.geometry = geometry;
  p.config.geometry.dim = get("head0.geometry").cols();
  for (std::size_t m = 0; m < heads; ++m) {
    const std::string h = "head" + std::to_string(m) + ".";
    p.heads.push_back({Parameter(get(h + "query")), Parameter(get(h + "key")),
                       Parameter(get(h + "value")), Parameter(get(h + "geometry"))});
  }
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

}  // namespace subtext
