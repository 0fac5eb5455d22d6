#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cpsbench/instruction.hpp"

namespace cpsbench {

struct CubeSpec {
  Color color = Color::red;
  double payload_g = 0.0;
};

// Named joint targets plus belt geometry for the sorting cell.
struct SortingScene {
  std::map<std::string, std::array<double, 4>> stations;
  double belt_transfer_mm = 40.0;
  std::vector<CubeSpec> cube_queue;

  const std::array<double, 4>& station(const std::string& name) const;
  std::string bucket_for(Color c) const;  // "" for unknown colors
};

// Default station table. Buckets exist for all four cube colors.
SortingScene default_scene();

// Plain key-value scene file:
//   transfer_mm = 40
//   station.home = 0 20 20 0
//   cube = red 195
SortingScene load_scene(const std::string& path);
void save_scene(const SortingScene& scene, const std::string& path);

}  // namespace cpsbench
