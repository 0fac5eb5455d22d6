#include "cpsbench/scene.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpsbench {

const char* to_string(Color c) {
  switch (c) {
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::blue: return "blue";
    case Color::yellow: return "yellow";
    default: return "none";
  }
}

Color color_from_string(const std::string& s) {
  if (s == "red") return Color::red;
  if (s == "green") return Color::green;
  if (s == "blue") return Color::blue;
  if (s == "yellow") return Color::yellow;
  if (s == "none") return Color::none;
  throw std::invalid_argument("unknown color: " + s);
}

const std::array<double, 4>& SortingScene::station(const std::string& name) const {
  auto it = stations.find(name);
  if (it == stations.end())
    throw std::invalid_argument("unknown station: " + name);
  return it->second;
}

std::string SortingScene::bucket_for(Color c) const {
  std::string name = std::string("bucket_") + to_string(c);
  return stations.count(name + "_above") ? name : std::string();
}

SortingScene default_scene() {
  SortingScene s;
  s.belt_transfer_mm = 40.0;
  s.stations = {
      {"home", {0.0, 20.0, 20.0, 0.0}},
      {"settle", {135.0, 20.0, 20.0, 0.0}},
      {"park", {-45.0, 20.0, 20.0, 0.0}},
      {"belt_above", {-120.0, 35.0, 45.0, 0.0}},
      {"belt_pick", {-120.0, 55.0, 60.0, 0.0}},
      {"camera", {125.0, 30.0, 40.0, 90.0}},
      {"bucket_red_above", {-115.0, 30.0, 40.0, -90.0}},
      {"bucket_red_at", {-115.0, 50.0, 55.0, -90.0}},
      {"bucket_green_above", {-95.0, 30.0, 40.0, -90.0}},
      {"bucket_green_at", {-95.0, 50.0, 55.0, -90.0}},
      {"bucket_blue_above", {-75.0, 30.0, 40.0, -90.0}},
      {"bucket_blue_at", {-75.0, 50.0, 55.0, -90.0}},
      {"bucket_yellow_above", {-55.0, 30.0, 40.0, -90.0}},
      {"bucket_yellow_at", {-55.0, 50.0, 55.0, -90.0}},
      // Micro-benchmark endpoints: a 90 degree base swing.
      {"sweep_a", {-45.0, 20.0, 20.0, 0.0}},
      {"sweep_b", {45.0, 20.0, 20.0, 0.0}},
  };
  return s;
}

SortingScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  SortingScene s;
  s.belt_transfer_mm = 40.0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::istringstream key_s(line.substr(0, eq));
    std::string key;
    key_s >> key;
    std::istringstream val(line.substr(eq + 1));
    try {
      if (key == "transfer_mm") {
        val >> s.belt_transfer_mm;
      } else if (key.rfind("station.", 0) == 0) {
        std::array<double, 4> j{};
        for (double& a : j)
          if (!(val >> a)) throw std::runtime_error("expected 4 joint angles");
        s.stations[key.substr(8)] = j;
      } else if (key == "cube") {
        std::string color;
        double g = 0.0;
        val >> color >> g;
        s.cube_queue.push_back({color_from_string(color), g});
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  if (s.stations.empty()) s.stations = default_scene().stations;
  return s;
}

void save_scene(const SortingScene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  out << "transfer_mm = " << scene.belt_transfer_mm << "\n";
  for (const auto& [name, j] : scene.stations)
    out << "station." << name << " = " << j[0] << " " << j[1] << " " << j[2]
        << " " << j[3] << "\n";
  for (const auto& c : scene.cube_queue)
    out << "cube = " << to_string(c.color) << " " << c.payload_g << "\n";
}

}  // namespace cpsbench
