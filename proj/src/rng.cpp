#include "hippd/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hippd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double Rng::uniform() {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
  return kUniformEpsilon + (1.0 - 2.0 * kUniformEpsilon) * unit;
}

double Rng::uniform(double lo, double hi) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  // Lemire's multiply-shift reduction; bias is at most n / 2^64.
  const auto wide = static_cast<unsigned __int128>(engine_()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << seed_ << ' ' << engine_;
  return out.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  Rng rng;
  in >> rng.seed_ >> rng.engine_;
  if (in.fail()) throw std::invalid_argument("Rng::deserialize: malformed generator state");
  return rng;
}

double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

Tensor sample_gumbel(const Shape& shape, Rng& rng) {
  Tensor out(shape);
  for (auto& v : out.values()) v = gumbel_from_uniform(rng.uniform());
  return out;
}

}  // namespace hippd
