#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace homog {

inline constexpr int kMaxDimension = 6;

/// Lattice point of Z^d; coordinates beyond the active dimension stay 0.
using Point = std::array<std::int32_t, kMaxDimension>;

/// Non-oriented nearest-neighbour edge (base, base + e_axis), always stored
/// from its lower endpoint.
struct EdgeId {
    Point base{};
    int axis = 0;

    friend bool operator==(const EdgeId&, const EdgeId&) = default;
};

inline Point unit_vector(int axis) {
    Point p{};
    p[axis] = 1;
    return p;
}

/// Canonical edge joining two neighbouring sites, in either orientation.
/// Throws DomainError if x and y are not nearest neighbours.
EdgeId edge_between(const Point& x, const Point& y, int dimension);

/// Injective 64-bit packing of an edge: 60/d bits per coordinate (offset
/// binary) and the axis in the top bits. Throws DomainError when a coordinate
/// does not fit.
std::uint64_t edge_key(const EdgeId& e, int dimension);

/// Row-major index of z in [0, side)^d.
inline std::size_t linear_index(const Point& z, int side, int dimension) {
    std::size_t idx = 0;
    for (int i = dimension - 1; i >= 0; --i) idx = idx * side + static_cast<std::size_t>(z[i]);
    return idx;
}

inline Point point_from_index(std::size_t idx, int side, int dimension) {
    Point z{};
    for (int i = 0; i < dimension; ++i) {
        z[i] = static_cast<std::int32_t>(idx % side);
        idx /= side;
    }
    return z;
}

inline std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

inline int wrap(int x, int period) {
    const int r = x % period;
    return r < 0 ? r + period : r;
}

std::string to_string(const Point& p, int dimension);

}  // namespace homog
