#include "degeo/svr.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "degeo/error.hpp"
#include "degeo/scoring.hpp"
#include "degeo/table.hpp"

namespace degeo {

namespace {

constexpr double kTau = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return d;
}

// Dual of epsilon-SVR in the 2l-variable form: variable t < l is alpha_t
// (sign +1), variable t >= l is alpha*_{t-l} (sign -1).
class SmoSolver {
 public:
  SmoSolver(const std::vector<std::vector<double>>& kernel, const std::vector<double>& labels, double eps,
            double cost)
      : k_(kernel), l_(labels.size()), cost_(cost), alpha_(2 * l_, 0.0), grad_(2 * l_), sign_(2 * l_) {
    for (std::size_t i = 0; i < l_; ++i) {
      sign_[i] = 1;
      sign_[i + l_] = -1;
      grad_[i] = eps - labels[i];
      grad_[i + l_] = eps + labels[i];
    }
  }

  void solve(double tol, long max_iter) {
    for (long iter = 0; iter < max_iter; ++iter) {
      std::size_t i = 0, j = 0;
      if (!select(tol, i, j)) return;
      update(i, j);
    }
  }

  std::vector<double> coefficients() const {
    std::vector<double> c(l_);
    for (std::size_t i = 0; i < l_; ++i) c[i] = alpha_[i] - alpha_[i + l_];
    return c;
  }

  double offset() const {
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    int n_free = 0;
    for (std::size_t t = 0; t < 2 * l_; ++t) {
      const double yg = sign_[t] * grad_[t];
      if (at_upper(t)) {
        if (sign_[t] < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (at_lower(t)) {
        if (sign_[t] > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    return n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  }

 private:
  double q(std::size_t s, std::size_t t) const { return sign_[s] * sign_[t] * k_[s % l_][t % l_]; }
  double qd(std::size_t t) const { return k_[t % l_][t % l_]; }
  bool at_upper(std::size_t t) const { return alpha_[t] >= cost_; }
  bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

  // Maximal-violating first index, second-order choice of the second.
  bool select(double tol, std::size_t& out_i, std::size_t& out_j) const {
    double gmax = -std::numeric_limits<double>::infinity(), gmax2 = gmax;
    long gi = -1, gj = -1;
    for (std::size_t t = 0; t < 2 * l_; ++t) {
      if (sign_[t] > 0) {
        if (!at_upper(t) && -grad_[t] >= gmax) {
          gmax = -grad_[t];
          gi = static_cast<long>(t);
        }
      } else if (!at_lower(t) && grad_[t] >= gmax) {
        gmax = grad_[t];
        gi = static_cast<long>(t);
      }
    }
    if (gi < 0) return false;
    const auto i = static_cast<std::size_t>(gi);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < 2 * l_; ++t) {
      double grad_diff = 0.0;
      if (sign_[t] > 0) {
        if (at_lower(t)) continue;
        grad_diff = gmax + grad_[t];
        gmax2 = std::max(gmax2, grad_[t]);
      } else {
        if (at_upper(t)) continue;
        grad_diff = gmax - grad_[t];
        gmax2 = std::max(gmax2, -grad_[t]);
      }
      if (grad_diff <= 0.0) continue;
      const double quad = std::max(qd(i) + qd(t) - 2.0 * k_[i % l_][t % l_], kTau);
      const double obj = -grad_diff * grad_diff / quad;
      if (obj <= best) {
        best = obj;
        gj = static_cast<long>(t);
      }
    }
    if (gmax + gmax2 < tol || gj < 0) return false;
    out_i = i;
    out_j = static_cast<std::size_t>(gj);
    return true;
  }

  void update(std::size_t i, std::size_t j) {
    const double ci = cost_, cj = cost_;
    const double old_i = alpha_[i], old_j = alpha_[j];
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (sign_[i] != sign_[j]) {
      const double quad = std::max(qd(i) + qd(j) + 2.0 * q(i, j), kTau);
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > ci - cj) {
        if (ai > ci) { ai = ci; aj = ci - diff; }
      } else if (aj > cj) {
        aj = cj;
        ai = cj + diff;
      }
    } else {
      const double quad = std::max(qd(i) + qd(j) - 2.0 * q(i, j), kTau);
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) { ai = ci; aj = sum - ci; }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > cj) {
        if (aj > cj) { aj = cj; ai = sum - cj; }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t t = 0; t < 2 * l_; ++t) grad_[t] += q(i, t) * di + q(j, t) * dj;
  }

  const std::vector<std::vector<double>>& k_;
  std::size_t l_;
  double cost_;
  std::vector<double> alpha_, grad_;
  std::vector<int> sign_;
};

}  // namespace

SvrModel svr_train(std::vector<SvrSample> rows, const SvrConfig& config, std::vector<std::string> feature_names) {
  if (rows.size() < 2) throw TrainingError("SVR training needs at least two rows");
  const std::size_t dim = rows.front().features.size();
  bool has_pos = false, has_neg = false;
  for (const auto& r : rows) {
    if (r.features.size() != dim) throw TrainingError("SVR rows have inconsistent feature counts");
    (r.label > 0.5 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw TrainingError("SVR training data contains a single class");
  if (!(config.epsilon >= 0.0) || !(config.cost > 0.0)) throw TrainingError("invalid SVR epsilon or cost");

  std::sort(rows.begin(), rows.end(), [](const SvrSample& a, const SvrSample& b) {
    if (a.features != b.features) return a.features < b.features;
    return a.label < b.label;
  });

  SvrModel model;
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty()) {
    for (std::size_t k = 0; k < dim; ++k) model.feature_names.push_back("f" + std::to_string(k));
  }
  if (model.feature_names.size() != dim) throw TrainingError("feature name count does not match rows");
  model.epsilon = config.epsilon;
  model.cost = config.cost;

  const double n = static_cast<double>(rows.size());
  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 1.0);
  for (std::size_t k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.features[k];
    mean /= n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r.features[k] - mean) * (r.features[k] - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    model.feature_mean[k] = mean;
    model.feature_scale[k] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& r : rows) {
    std::vector<double> z(dim);
    for (std::size_t k = 0; k < dim; ++k) z[k] = (r.features[k] - model.feature_mean[k]) / model.feature_scale[k];
    x.push_back(std::move(z));
    y.push_back(r.label);
  }

  if (config.bandwidth > 0.0) {
    model.bandwidth = config.bandwidth;
  } else {
    std::vector<double> dists;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j) dists.push_back(std::sqrt(squared_distance(x[i], x[j])));
    const double med = empirical_quantile(std::move(dists), 0.5);
    model.bandwidth = med > 0.0 ? med : 1.0;
  }

  const double inv = 1.0 / (2.0 * model.bandwidth * model.bandwidth);
  std::vector<std::vector<double>> kernel(x.size(), std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) kernel[i][j] = kernel[j][i] = std::exp(-squared_distance(x[i], x[j]) * inv);

  SmoSolver solver(kernel, y, config.epsilon, config.cost);
  solver.solve(config.tolerance, config.max_iterations);
  const auto coef = solver.coefficients();
  model.bias = -solver.offset();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (coef[i] == 0.0) continue;
    model.support_vectors.push_back(x[i]);
    model.coefficients.push_back(coef[i]);
  }
  return model;
}

double svr_predict(const SvrModel& model, std::span<const double> features) {
  if (features.size() != model.dimension()) throw ArgumentError("feature vector has the wrong dimension");
  std::vector<double> z(features.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = (features[k] - model.feature_mean[k]) / model.feature_scale[k];
  const double inv = 1.0 / (2.0 * model.bandwidth * model.bandwidth);
  double out = model.bias;
  for (std::size_t s = 0; s < model.support_vectors.size(); ++s)
    out += model.coefficients[s] * std::exp(-squared_distance(model.support_vectors[s], z) * inv);
  return out;
}

void write_svr_model(std::ostream& out, const SvrModel& m) {
  auto row = [&](const char* key, const std::vector<double>& v) {
    out << key;
    for (double x : v) out << ' ' << format_number(x);
    out << '\n';
  };
  out << "degeo-svr 1\nfeatures";
  for (const auto& f : m.feature_names) out << ' ' << f;
  out << '\n';
  row("mean", m.feature_mean);
  row("scale", m.feature_scale);
  out << "bandwidth " << format_number(m.bandwidth) << "\nbias " << format_number(m.bias) << "\nepsilon "
      << format_number(m.epsilon) << "\ncost " << format_number(m.cost) << "\nsupport_vectors "
      << m.support_vectors.size() << '\n';
  for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
    out << format_number(m.coefficients[s]);
    for (double x : m.support_vectors[s]) out << ' ' << format_number(x);
    out << '\n';
  }
}

SvrModel read_svr_model(std::istream& in) {
  auto fail = [](const std::string& what) -> SvrModel { throw FormatError("SVR model: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != "degeo-svr 1") return fail("bad header");

  auto keyed = [&](const std::string& key) {
    if (!std::getline(in, line)) fail("missing '" + key + "'");
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) fail("expected '" + key + "', found '" + k + "'");
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(t);
    return tokens;
  };
  auto numbers = [&](const std::vector<std::string>& tokens) {
    std::vector<double> v;
    for (const auto& t : tokens) {
      double x = 0.0;
      if (!parse_number(t, x)) fail("invalid number '" + t + "'");
      v.push_back(x);
    }
    return v;
  };
  auto scalar = [&](const std::string& key) {
    const auto v = numbers(keyed(key));
    if (v.size() != 1) fail("'" + key + "' takes one value");
    return v.front();
  };

  SvrModel m;
  m.feature_names = keyed("features");
  m.feature_mean = numbers(keyed("mean"));
  m.feature_scale = numbers(keyed("scale"));
  const std::size_t dim = m.feature_names.size();
  if (m.feature_mean.size() != dim || m.feature_scale.size() != dim) fail("standardization size mismatch");
  m.bandwidth = scalar("bandwidth");
  m.bias = scalar("bias");
  m.epsilon = scalar("epsilon");
  m.cost = scalar("cost");
  const double n_sv = scalar("support_vectors");
  if (n_sv < 0 || n_sv != std::floor(n_sv)) fail("invalid support vector count");
  for (std::size_t s = 0; s < static_cast<std::size_t>(n_sv); ++s) {
    if (!std::getline(in, line)) fail("truncated support vectors");
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(t);
    auto v = numbers(tokens);
    if (v.size() != dim + 1) fail("support vector has the wrong dimension");
    m.coefficients.push_back(v.front());
    m.support_vectors.emplace_back(v.begin() + 1, v.end());
  }
  if (!(m.bandwidth > 0.0)) fail("bandwidth must be positive");
  return m;
}

}  // namespace degeo
