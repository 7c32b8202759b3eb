#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ebmkit/cohort.hpp"

namespace ebmkit {

struct HospitalSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::set<std::string> chosen;  // hospitals on the training side
  double train_fraction = 0.0;
};

/// Picks a set of hospitals whose patients make up as close to
/// `target_fraction` of all rows as possible. Exhaustive for up to 20
/// hospitals, seeded randomized greedy beyond that. Ties go to the larger
/// training set, then to the lexicographically smallest hospital set.
HospitalSplit hospital_split(const Cohort& cohort, double target_fraction = 0.75,
                             std::uint64_t seed = 0);

/// The same objective over hospital sizes alone. Exposed for testing both
/// search strategies directly.
std::set<std::string> choose_hospitals_exhaustive(const std::vector<std::pair<std::string, std::size_t>>& sizes,
                                                  double target_fraction);
std::set<std::string> choose_hospitals_greedy(const std::vector<std::pair<std::string, std::size_t>>& sizes,
                                              double target_fraction, std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Label-stratified k-fold partition of row indices.
std::vector<Fold> kfold(std::span<const double> labels, int k = 5, std::uint64_t seed = 0);
std::vector<Fold> kfold(const Cohort& cohort, std::string_view outcome, int k = 5,
                        std::uint64_t seed = 0);

}  // namespace ebmkit
