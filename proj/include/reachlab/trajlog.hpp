#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "reachlab/common.hpp"
#include "reachlab/env.hpp"

namespace reachlab {

// One nominal-environment episode: observations y_0..y_n and the committed
// actions u_0..u_{n-1} applied between consecutive observations.
struct Episode {
  std::vector<Obs5> observations;
  std::vector<Vec2> actions;
};

// Binary trajectory log: magic "RLTJ", u32 version, u64 episode count, then
// per episode u64 observation count followed by the observation and action
// doubles (actions are one shorter than observations).
inline void save_trajectories(const std::string& path,
                              const std::vector<Episode>& episodes) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "trajlog: cannot open for write: " + path);
  out.write("RLTJ", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t n = episodes.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const auto& ep : episodes) {
    check(ep.actions.size() + 1 == ep.observations.size(),
          "trajlog: episode must have one more observation than actions");
    const std::uint64_t m = ep.observations.size();
    out.write(reinterpret_cast<const char*>(&m), sizeof m);
    out.write(reinterpret_cast<const char*>(ep.observations.data()),
              static_cast<std::streamsize>(m * sizeof(Obs5)));
    out.write(reinterpret_cast<const char*>(ep.actions.data()),
              static_cast<std::streamsize>((m - 1) * sizeof(Vec2)));
  }
  check(out.good(), "trajlog: write failed: " + path);
}

inline std::vector<Episode> load_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "trajlog: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  check(in.good() && std::string(magic, 4) == "RLTJ", "trajlog: bad magic: " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  check(version == 1, "trajlog: unsupported version");
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  std::vector<Episode> episodes(n);
  for (auto& ep : episodes) {
    std::uint64_t m = 0;
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    check(in.good() && m >= 1, "trajlog: truncated episode header");
    ep.observations.resize(m);
    ep.actions.resize(m - 1);
    in.read(reinterpret_cast<char*>(ep.observations.data()),
            static_cast<std::streamsize>(m * sizeof(Obs5)));
    in.read(reinterpret_cast<char*>(ep.actions.data()),
            static_cast<std::streamsize>((m - 1) * sizeof(Vec2)));
  }
  check(in.good(), "trajlog: truncated file: " + path);
  return episodes;
}

}  // namespace reachlab
