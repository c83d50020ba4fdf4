#pragma once

#include <string>
#include <vector>

#include "inducer/dynamics.hpp"

namespace inducer {

// Affine branch T x = A x + c on the half-open box [lo, hi) (optionally narrowed by `extra`),
// with pull-back valid for y inside the ambient box.
Branch make_affine_branch(std::string id, const Affine& fwd, int d, const Vec& lo, const Vec& hi,
                          const Vec& amb_lo, const Vec& amb_hi,
                          std::function<bool(const Vec&)> extra = nullptr);

// M0: doubling map on [0,1).
MapPtr make_m0(double eta);
// M1: folded quadrant map on [0,1)^2, affine and Markov on dyadic squares.
MapPtr make_m1(double eta);
// M2: 3x mod 1 with a strip-dependent shift; strips cut by a line of slope sqrt(2)-1.
MapPtr make_m2(double eta);
// M3: two full branches f(2x), f(2x-1) with f(u) = u + b u (1-u).
MapPtr make_m3(double eta);

constexpr double kM3Bend = 0.1;

MapPtr make_catalog(const std::string& id, double eta);
std::vector<std::string> catalog_ids();
double default_eta(const std::string& id);

// Reads a map-spec file. Parse errors report line and column.
MapPtr load_map_spec(const std::string& path, double eta_override = 0);
MapPtr parse_map_spec(const std::string& text, double eta_override = 0);

}  // namespace inducer
