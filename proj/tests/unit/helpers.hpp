#pragma once

#include <memory>

#include "loa/problems.hpp"

namespace loa_test {

/// ½‖Ax − b‖² with an explicit initialization pair.
inline loa::Problem quadratic(loa::Matrix a, loa::Vector b, loa::Vector x_prev, loa::Vector x0) {
  auto q = std::make_shared<loa::Quadratic>();
  q->a_t = loa::transpose(a);
  q->a = std::move(a);
  q->b = std::move(b);
  loa::Problem p = loa::make_quadratic(q, "test-quadratic");
  p.x_prev = std::move(x_prev);
  p.x0 = std::move(x0);
  return p;
}

inline loa::Problem seeded_quadratic(std::size_t n, std::uint64_t seed) {
  loa::Rng rng(seed);
  loa::Problem p = loa::gen_quadratic(n, rng);
  loa::Rng r = rng.substream("init");
  loa::make_init_pair(p, r);
  return p;
}

inline double rel_dev(const loa::Vector& a, const loa::Vector& b) {
  return loa::norm(a - b) / std::max(loa::norm(a), 1e-300);
}

}  // namespace loa_test
