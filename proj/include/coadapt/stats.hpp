#pragma once

#include <vector>

namespace coadapt {

// One-sided Mann-Whitney U test of "a tends to be smaller than b".
// Exact permutation distribution when there are no ties, otherwise the
// tie-corrected normal approximation. Returns a value in (0, 1].
double mann_whitney_less(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& v);
// Sample standard deviation; 0 for fewer than two values.
double sample_std(const std::vector<double>& v);
// Trailing moving average with the given window (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& v, int window);

}  // namespace coadapt
