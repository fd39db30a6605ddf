#pragma once

#include <algorithm>
#include <exception>
#include <vector>

namespace psmooth::internal {

// Index j with grid[j] <= t <= grid[j+1], restricted to j >= first.
inline int bracket(const std::vector<double>& grid, double t, int first, double* theta) {
  const int n = static_cast<int>(grid.size());
  if (t <= grid[first]) {
    *theta = 0.0;
    return first;
  }
  if (t >= grid[n - 1]) {
    *theta = 1.0;
    return n - 2;
  }
  const auto it = std::upper_bound(grid.begin() + first, grid.end(), t);
  const int j = static_cast<int>(it - grid.begin()) - 1;
  *theta = (t - grid[j]) / (grid[j + 1] - grid[j]);
  return j;
}

// OpenMP loop that rethrows the first exception on the calling thread.
template <class F>
void parallel_for(int n, F&& body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(psmooth_parallel_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace psmooth::internal
