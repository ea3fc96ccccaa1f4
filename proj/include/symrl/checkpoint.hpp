#pragma once

#include <map>
#include <string>
#include <vector>

#include "symrl/net.hpp"

namespace symrl {

// Flat binary checkpoint: magic tag, version, then named chunks. Network
// chunks carry their arch descriptor followed by little-endian 64-bit floats
// in layer order (weights row-major, then biases). Raw chunks are plain
// float arrays.
struct Checkpoint {
  std::map<std::string, NetParams> nets;
  std::map<std::string, std::vector<double>> raws;

  void put_net(const std::string& name, const NetParams& p) { nets[name] = p; }
  void put_raw(const std::string& name, std::vector<double> v) {
    raws[name] = std::move(v);
  }
  const NetParams& net(const std::string& name) const;
  const std::vector<double>& raw(const std::string& name) const;
  bool has_raw(const std::string& name) const { return raws.count(name) > 0; }
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace symrl
