#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "reachlab/nn.hpp"

namespace reachlab {

// Flat versioned binary container for named parameter sections.
//
// Layout (little-endian):
//   magic "RLCP", u32 version = 1, u32 section count, then per section:
//   u32 name length, name bytes, u32 kind (0 mlp, 1 vector, 2 string),
//   payload. Mlp payload: u32 width count, i64 widths, u32 output
//   activation, then per layer row-major weights then biases as f64.
//   Vector payload: u64 length + f64 data. String payload: u32 length + bytes.
// Sections are written in name order, so equal contents give equal bytes.
class Checkpoint {
 public:
  std::map<std::string, MlpParams> mlps;
  std::map<std::string, Vec> vectors;
  std::map<std::string, std::string> strings;

  static constexpr std::uint32_t kVersion = 1;

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    check(out.good(), "checkpoint: cannot open for write: " + path);
    out.write("RLCP", 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(mlps.size() + vectors.size() + strings.size()));
    for (const auto& [name, p] : mlps) {
      write_str(out, name);
      write_u32(out, 0);
      write_u32(out, static_cast<std::uint32_t>(p.spec.widths.size()));
      for (int w : p.spec.widths) write_i64(out, w);
      write_u32(out, p.spec.output_activation == Activation::tanh ? 1 : 0);
      for (const auto& l : p.layers) {
        write_f64s(out, l.w);
        write_f64s(out, l.b);
      }
    }
    for (const auto& [name, v] : vectors) {
      write_str(out, name);
      write_u32(out, 1);
      write_u64(out, v.size());
      write_f64s(out, v);
    }
    for (const auto& [name, s] : strings) {
      write_str(out, name);
      write_u32(out, 2);
      write_str(out, s);
    }
    check(out.good(), "checkpoint: write failed: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "checkpoint: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    check(in.good() && std::memcmp(magic, "RLCP", 4) == 0,
          "checkpoint: bad magic: " + path);
    check(read_u32(in) == kVersion, "checkpoint: unsupported version: " + path);
    Checkpoint c;
    const std::uint32_t n = read_u32(in);
    for (std::uint32_t s = 0; s < n; ++s) {
      const std::string name = read_str(in);
      const std::uint32_t kind = read_u32(in);
      if (kind == 0) {
        MlpSpec spec;
        const std::uint32_t nw = read_u32(in);
        spec.widths.resize(nw);
        for (auto& w : spec.widths) w = static_cast<int>(read_i64(in));
        spec.output_activation = read_u32(in) == 1 ? Activation::tanh : Activation::identity;
        MlpParams p = make_zero_params(spec);
        for (auto& l : p.layers) {
          read_f64s(in, l.w);
          read_f64s(in, l.b);
        }
        c.mlps.emplace(name, std::move(p));
      } else if (kind == 1) {
        Vec v(read_u64(in));
        read_f64s(in, v);
        c.vectors.emplace(name, std::move(v));
      } else if (kind == 2) {
        c.strings.emplace(name, read_str(in));
      } else {
        check(false, "checkpoint: unknown section kind");
      }
    }
    check(in.good(), "checkpoint: truncated file: " + path);
    return c;
  }

  const MlpParams& mlp(const std::string& name) const {
    auto it = mlps.find(name);
    check(it != mlps.end(), "checkpoint: missing mlp section: " + name);
    return it->second;
  }
  const Vec& vector(const std::string& name) const {
    auto it = vectors.find(name);
    check(it != vectors.end(), "checkpoint: missing vector section: " + name);
    return it->second;
  }
  const std::string& string(const std::string& name) const {
    auto it = strings.find(name);
    check(it != strings.end(), "checkpoint: missing string section: " + name);
    return it->second;
  }

 private:
  static void write_u32(std::ostream& o, std::uint32_t v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static void write_u64(std::ostream& o, std::uint64_t v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static void write_i64(std::ostream& o, std::int64_t v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static void write_f64s(std::ostream& o, const Vec& v) {
    o.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  static void write_str(std::ostream& o, const std::string& s) {
    write_u32(o, static_cast<std::uint32_t>(s.size()));
    o.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static std::uint32_t read_u32(std::istream& i) {
    std::uint32_t v = 0;
    i.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  static std::uint64_t read_u64(std::istream& i) {
    std::uint64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  static std::int64_t read_i64(std::istream& i) {
    std::int64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  static void read_f64s(std::istream& i, Vec& v) {
    i.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  static std::string read_str(std::istream& i) {
    std::string s(read_u32(i), '\0');
    i.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
  }
};

}  // namespace reachlab
