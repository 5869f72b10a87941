#pragma once
// Flat n-d activation buffer. Layout convention throughout the nets:
// channel-major (C, N, H, W) — a channel's planes for the whole batch are
// contiguous, so per-channel reductions and GEMMs map directly onto memory.
// The 3D stem uses (C, D, N, H, W) with depth D=2.

#include <cstddef>
#include <vector>

namespace tse::nn {

template <typename S>
struct Buf {
  std::vector<int> shape;
  std::vector<S> a;

  Buf() = default;
  explicit Buf(std::vector<int> s) { resize(std::move(s)); }

  void resize(std::vector<int> s) {
    shape = std::move(s);
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    a.assign(n, S(0));
  }
  size_t numel() const { return a.size(); }
  S* data() { return a.data(); }
  const S* data() const { return a.data(); }
  void zero() { std::fill(a.begin(), a.end(), S(0)); }
};

}  // namespace tse::nn
