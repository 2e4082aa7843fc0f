#include "gp3/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace gp3 {

namespace {

constexpr char kMagic[8] = {'G', 'P', '3', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("checkpoint: truncated file");
  return v;
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), s.size());
}

std::string take_str(std::istream& is) {
  const auto n = take<std::uint32_t>(is);
  if (n > (1u << 20)) throw Error("checkpoint: implausible name length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error("checkpoint: truncated file");
  return s;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("checkpoint: cannot write " + path);
  os.write(kMagic, 8);
  put(os, kVersion);
  put(os, step);
  put(os, config_hash);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ints.size()));
  for (const auto& [n, v] : ints) {
    put_str(os, n);
    put(os, v);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(rngs.size()));
  for (const auto& [n, st] : rngs) {
    put_str(os, n);
    for (auto w : st) put(os, w);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [n, a] : arrays) {
    put_str(os, n);
    put<std::uint64_t>(os, a.size());
    os.write(reinterpret_cast<const char*>(a.data()),
             static_cast<std::streamsize>(a.size() * sizeof(double)));
  }
  if (!os) throw Error("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw Error("checkpoint: bad magic in " + path);
  const auto version = take<std::uint32_t>(is);
  if (version != kVersion)
    throw Error("checkpoint: version mismatch (file " +
                std::to_string(version) + ", expected " +
                std::to_string(kVersion) + ")");
  Checkpoint ck;
  ck.step = take<std::uint64_t>(is);
  ck.config_hash = take<std::uint64_t>(is);
  const auto n_ints = take<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_ints; ++i) {
    std::string name = take_str(is);
    ck.ints.emplace_back(std::move(name), take<std::int64_t>(is));
  }
  const auto n_rngs = take<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_rngs; ++i) {
    std::string name = take_str(is);
    std::array<std::uint64_t, 4> st;
    for (auto& w : st) w = take<std::uint64_t>(is);
    ck.rngs.emplace_back(std::move(name), st);
  }
  const auto n_arrays = take<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    std::string name = take_str(is);
    const auto len = take<std::uint64_t>(is);
    std::vector<double> a(len);
    is.read(reinterpret_cast<char*>(a.data()),
            static_cast<std::streamsize>(len * sizeof(double)));
    if (!is) throw Error("checkpoint: truncated file");
    ck.arrays.emplace_back(std::move(name), std::move(a));
  }
  return ck;
}

const std::vector<double>& Checkpoint::array(const std::string& name) const {
  for (const auto& [n, a] : arrays)
    if (n == name) return a;
  throw Error("checkpoint: missing array " + name);
}

std::array<std::uint64_t, 4> Checkpoint::rng(const std::string& name) const {
  for (const auto& [n, st] : rngs)
    if (n == name) return st;
  throw Error("checkpoint: missing rng state " + name);
}

std::int64_t Checkpoint::integer(const std::string& name) const {
  for (const auto& [n, v] : ints)
    if (n == name) return v;
  throw Error("checkpoint: missing integer " + name);
}

}  // namespace gp3
