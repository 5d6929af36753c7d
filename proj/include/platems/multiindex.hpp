#pragma once

#include <array>
#include <cstdint>

namespace platems {

// Sorted multi-indices over {0,1} of orders 2..4, stored by slot.
// A sorted multi-index is determined by how many of its entries equal 1,
// so slot = count of 1-entries. Multiplicity = binomial(order, slot):
//   order 2: {00, 01, 11}                -> {1, 2, 1}
//   order 3: {000, 001, 011, 111}        -> {1, 3, 3, 1}
//   order 4: {0000, 0001, 0011, 0111, 1111} -> {1, 4, 6, 4, 1}
// Indices are 0-based in code; records and docs use the 1-based names.

inline constexpr int n_slots(int order) { return order + 1; }

template <int Order>
inline int sorted_slot(const std::array<int, Order>& idx) {
  int c = 0;
  for (int v : idx) c += v;
  return c;
}

inline int sorted_slot2(int a, int b) { return a + b; }
inline int sorted_slot3(int a, int b, int c) { return a + b + c; }
inline int sorted_slot4(int a, int b, int c, int d) { return a + b + c + d; }

inline int multiplicity(int order, int slot) {
  static constexpr int binom[5][5] = {
      {1, 0, 0, 0, 0},
      {1, 1, 0, 0, 0},
      {1, 2, 1, 0, 0},
      {1, 3, 3, 1, 0},
      {1, 4, 6, 4, 1},
  };
  return binom[order][slot];
}

// Representative sorted tuple for a slot: slot entries of 1 packed last.
template <int Order>
inline std::array<int, Order> sorted_tuple(int slot) {
  std::array<int, Order> t{};
  for (int i = 0; i < Order; ++i) t[i] = (i >= Order - slot) ? 1 : 0;
  return t;
}

}  // namespace platems
