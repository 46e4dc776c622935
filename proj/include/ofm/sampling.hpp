#pragma once

// Pair selection for relative-distance training: plain uniform sampling of
// image pairs, and a stratified variant that equalizes the histogram of
// truth-space distances so large rotations are not drowned out by the
// (1 - cos) density of random orientation gaps.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ofm/so3.hpp"

namespace ofm {

enum class PairScheme { Random, Stratified };

struct PairSet {
  PairScheme scheme = PairScheme::Random;
  int n_bins = 0;                          // stratified only
  std::vector<std::pair<int, int>> pairs;  // unique, i < j
  std::vector<int> bin;                    // per pair; -1 when not binned
};

// round(fraction * n*(n-1)/2) unique pairs, at least one. fraction in (0,1].
PairSet random_pairs(int n_images, double fraction, uint64_t seed);

// Draws n_candidates unique pairs, bins their geodesic distances into n_bins
// equal-width bins over [0, pi], and keeps the same number (the minimum
// occupied-bin count) from every occupied bin, in draw order.
PairSet stratified_pairs(const std::vector<Quat>& orientations, long n_candidates,
                         int n_bins, uint64_t seed);

// CSV with columns i,j,distance_bin.
void write_pairs_csv(const std::string& path, const PairSet& set);
PairSet read_pairs_csv(const std::string& path);

}  // namespace ofm
