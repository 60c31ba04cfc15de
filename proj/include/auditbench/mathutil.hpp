#pragma once

#include <vector>

namespace auditbench {

// Standard normal CDF.
double normal_cdf(double x);

// Inverse standard normal CDF (Acklam's rational approximation, refined by
// one Halley step; absolute error well under 1e-9).
double normal_quantile(double p);

// Dense symmetric matrix in row-major order.
struct SymmetricEigen {
  std::vector<double> eigenvalues;
  std::vector<double> eigenvectors;  // column k = eigenvector k, row-major
};

// Cyclic Jacobi eigendecomposition for small symmetric matrices.
SymmetricEigen jacobi_eigen(std::vector<double> a, size_t n);

// Repairs a symmetric matrix to PSD by clamping eigenvalues at floor,
// then restores a unit diagonal.
std::vector<double> repair_correlation(std::vector<double> a, size_t n,
                                       double floor = 1e-8);

// Lower-triangular Cholesky factor; requires PSD input (tiny jitter applied).
std::vector<double> cholesky(std::vector<double> a, size_t n);

}  // namespace auditbench
