#include "ofm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ofm/csv.hpp"
#include "ofm/rng.hpp"

namespace ofm {

namespace {

// unique unordered pairs drawn uniformly, in draw order
std::vector<std::pair<int, int>> draw_unique_pairs(int n, long count, Rng& rng) {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<size_t>(count));
  std::unordered_set<uint64_t> seen;
  seen.reserve(static_cast<size_t>(count) * 2);
  while (static_cast<long>(out.size()) < count) {
    int i = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    int j = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    uint64_t key = static_cast<uint64_t>(i) * static_cast<uint64_t>(n) + static_cast<uint64_t>(j);
    if (seen.insert(key).second) out.emplace_back(i, j);
  }
  return out;
}

}  // namespace

PairSet random_pairs(int n_images, double fraction, uint64_t seed) {
  require(n_images >= 2, "random_pairs: need at least two images");
  require(fraction > 0.0 && fraction <= 1.0, "random_pairs: fraction must be in (0, 1]");
  const double universe = 0.5 * static_cast<double>(n_images) * (n_images - 1);
  long count = std::max(1L, std::lround(fraction * universe));
  count = std::min(count, static_cast<long>(universe));
  Rng rng(seed);
  PairSet set;
  set.scheme = PairScheme::Random;
  set.pairs = draw_unique_pairs(n_images, count, rng);
  std::sort(set.pairs.begin(), set.pairs.end());
  set.bin.assign(set.pairs.size(), -1);
  return set;
}

PairSet stratified_pairs(const std::vector<Quat>& orientations, long n_candidates,
                         int n_bins, uint64_t seed) {
  const int n = static_cast<int>(orientations.size());
  require(n >= 2, "stratified_pairs: need at least two orientations");
  require(n_bins >= 1, "stratified_pairs: need at least one bin");
  require(n_candidates >= 1, "stratified_pairs: need at least one candidate");
  const double universe = 0.5 * static_cast<double>(n) * (n - 1);
  n_candidates = std::min(n_candidates, static_cast<long>(universe));

  Rng rng(seed);
  auto cand = draw_unique_pairs(n, n_candidates, rng);
  std::vector<int> cand_bin(cand.size());
  std::vector<long> bin_count(static_cast<size_t>(n_bins), 0);
  const double width = kPi / n_bins;
  for (size_t k = 0; k < cand.size(); ++k) {
    double d = geodesic_distance(orientations[cand[k].first], orientations[cand[k].second]);
    int b = std::min(static_cast<int>(d / width), n_bins - 1);
    cand_bin[k] = b;
    ++bin_count[b];
  }
  long m = 0;
  for (long c : bin_count)
    if (c > 0) m = m == 0 ? c : std::min(m, c);

  PairSet set;
  set.scheme = PairScheme::Stratified;
  set.n_bins = n_bins;
  std::vector<long> taken(static_cast<size_t>(n_bins), 0);
  for (size_t k = 0; k < cand.size(); ++k) {
    if (taken[cand_bin[k]] >= m) continue;
    ++taken[cand_bin[k]];
    set.pairs.push_back(cand[k]);
    set.bin.push_back(cand_bin[k]);
  }
  return set;
}

void write_pairs_csv(const std::string& path, const PairSet& set) {
  Csv csv;
  csv.header = {"i", "j", "distance_bin"};
  for (size_t k = 0; k < set.pairs.size(); ++k)
    csv.rows.push_back({std::to_string(set.pairs[k].first), std::to_string(set.pairs[k].second),
                        std::to_string(set.bin[k])});
  csv.write_file(path);
}

PairSet read_pairs_csv(const std::string& path) {
  Csv csv = Csv::read_file(path);
  int ci = csv.col("i"), cj = csv.col("j"), cb = csv.col("distance_bin");
  require(ci >= 0 && cj >= 0 && cb >= 0, "read_pairs_csv: missing column");
  PairSet set;
  int max_bin = -1;
  for (size_t r = 0; r < csv.rows.size(); ++r) {
    set.pairs.emplace_back(static_cast<int>(csv.integer(r, ci)),
                           static_cast<int>(csv.integer(r, cj)));
    set.bin.push_back(static_cast<int>(csv.integer(r, cb)));
    max_bin = std::max(max_bin, set.bin.back());
  }
  set.scheme = max_bin >= 0 ? PairScheme::Stratified : PairScheme::Random;
  set.n_bins = max_bin >= 0 ? max_bin + 1 : 0;
  return set;
}

}  // namespace ofm
