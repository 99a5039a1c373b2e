#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace degeo {

struct SvrConfig {
  double epsilon = 0.1;
  double cost = 10.0;           // C
  double tolerance = 1e-3;      // KKT violation stopping threshold
  double bandwidth = 0.0;       // <= 0: median pairwise distance of standardized rows
  long max_iterations = 1000000;
};

// Epsilon-insensitive support vector regression with a Gaussian kernel
// exp(-|x - z|^2 / (2 bandwidth^2)) on standardized features.
struct SvrModel {
  std::vector<std::string> feature_names;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> coefficients;                  // alpha - alpha*
  double bias = 0.0;
  double bandwidth = 1.0;
  double epsilon = 0.1;
  double cost = 10.0;

  std::size_t dimension() const { return feature_mean.size(); }
};

struct SvrSample {
  std::vector<double> features;
  double label = 0.0;
};

// Rows are put in a canonical order before solving, so the fitted model
// does not depend on the order of `rows`.
SvrModel svr_train(std::vector<SvrSample> rows, const SvrConfig& config,
                   std::vector<std::string> feature_names = {});

double svr_predict(const SvrModel& model, std::span<const double> features);

void write_svr_model(std::ostream& out, const SvrModel& model);
SvrModel read_svr_model(std::istream& in);

}  // namespace degeo
