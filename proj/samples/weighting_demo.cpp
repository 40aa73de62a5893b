// Uniform versus information-optimal weights on one synthetic population
// where a few users have many clean samples and most have two noisy ones.

#include <cstdio>
#include <vector>

#include "hetpca/hetpca.hpp"

int main() {
  using namespace hetpca;
  const std::size_t d = 20, k = 2, n = 500;
  std::vector<std::size_t> m(n, 2);
  std::vector<double> etas(n, 5.0);
  for (std::size_t i = 0; i < 10; ++i) {
    m[i] = 50;
    etas[i] = 0.2;
  }
  auto [data, truth] = gen_pca(d, k, n, m, 1.0, Spherical{etas}, MeanFamily::Gaussian, {7, 0});

  const auto uniform = estimate_subspace(data, k, UniformWeights{});
  const auto optimal =
      estimate_subspace(data, k, InformationOptimalWeights{NoiseProfile{1.0, etas}});
  const auto profile = gamma_profile(NoiseProfile{1.0, etas}, m, k);

  std::printf("uniform  sin_theta = %.4f\n", max_principal_angle_sin(truth.basis, uniform.basis()));
  std::printf("optimal  sin_theta = %.4f\n", max_principal_angle_sin(truth.basis, optimal.basis()));
  std::printf("weighted upper bound (C = 1) = %.4f\n", upper_bound_weighted(profile, d, 0.1));
  std::printf("lower bound (C = 1)          = %.4f\n", hetpca::lower_bound(d, k, 0.1, profile.gamma));
  return 0;
}
