#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "delib/config.hpp"
#include "delib/corpus.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("delib-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline fs::path data_dir() { return fs::path(DELIB_TEST_DATA); }

/// Three simulated panel models with the given stage-2 peer weight.
inline std::map<delib::ModelId, delib::AgentSpec> sim_agents(double peer_weight = 0.5, double info_gain = 0.1) {
  std::map<delib::ModelId, delib::AgentSpec> agents;
  const double skill[] = {1.2, 0.8, 0.5};
  const double noise[] = {0.6, 1.0, 1.4};
  int i = 0;
  for (delib::ModelId m : {delib::ModelId::GPT5, delib::ModelId::Sonnet, delib::ModelId::Pro}) {
    delib::SimParams p;
    p.base_skill = skill[i];
    p.noise_sd = noise[i];
    p.peer_weight = peer_weight;
    p.info_gain = info_gain;
    agents[m] = delib::AgentSpec{m, p, nlohmann::ordered_json::object()};
    ++i;
  }
  return agents;
}

/// Config for a simulated run over `corpus_file` writing to `run_dir`.
inline delib::Config sim_config(const fs::path& corpus_file, const fs::path& run_dir, std::uint64_t seed = 3) {
  delib::Config c;
  c.corpus_path = corpus_file;
  c.run_dir = run_dir;
  c.seed = seed;
  c.agents = sim_agents();
  c.concurrency = 2;
  c.retry.base_delay = std::chrono::milliseconds(0);
  c.retry.max_delay = std::chrono::milliseconds(0);
  return c;
}

inline fs::path write_synthetic(const fs::path& dir, std::size_t n, std::uint64_t seed = 7, bool info = true) {
  delib::SyntheticOptions o;
  o.questions = n;
  o.seed = seed;
  o.with_information = info;
  const fs::path p = dir / "corpus.jsonl";
  delib::save_corpus(delib::synthetic_corpus(o), p);
  return p;
}

// ---- independent oracles -------------------------------------------------
// Deliberately naive: different algorithms from the library's.

/// Composite Simpson integration of f over [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Normal CDF by integrating the density from 0 (symmetry for the rest).
inline double oracle_normal_cdf(double x) {
  const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * M_PI); };
  const double half = simpson(pdf, 0.0, std::fabs(x), 20000);
  return x >= 0 ? 0.5 + half : 0.5 - half;
}

/// Student-t CDF (integer df) by integrating the density written with
/// lgamma. The tail beyond |t| uses the substitution u = 1/x on (0, 1/|t|].
inline double oracle_t_cdf(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  const auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const double a = std::fabs(t);
  double upper_tail;
  if (a < 1.0) {
    upper_tail = 0.5 - simpson(pdf, 0.0, a, 20000);
  } else {
    // pdf(1/u) / u^2 = c df^((df+1)/2) u^(df-1) / (u^2 df + 1)^((df+1)/2), in logs so large df
    // does not overflow; smooth at u = 0 for integer df.
    const auto g = [&](double u) {
      if (u == 0.0) return df == 1.0 ? c : 0.0;
      const double h = (df + 1) / 2;
      return std::exp(std::log(c) + h * std::log(df) + (df - 1) * std::log(u) - h * std::log1p(u * u * df));
    };
    upper_tail = simpson(g, 0.0, 1.0 / a, 20000);
  }
  return t >= 0 ? 1.0 - upper_tail : upper_tail;
}

/// Least squares via the normal equations X'X b = X'y and Gauss-Jordan
/// elimination with partial pivoting. Returns (beta, se).
inline std::pair<std::vector<double>, std::vector<double>> oracle_ols(const std::vector<double>& X, std::size_t k,
                                                                      const std::vector<double>& y) {
  const std::size_t n = y.size();
  // Augmented [X'X | I | X'y]
  std::vector<std::vector<double>> A(k, std::vector<double>(2 * k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t r = 0; r < n; ++r) A[i][j] += X[r * k + i] * X[r * k + j];
    }
    A[i][k + i] = 1.0;
    for (std::size_t r = 0; r < n; ++r) A[i][2 * k] += X[r * k + i] * y[r];
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    const double d = A[col][col];
    for (auto& v : A[col]) v /= d;
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = A[r][col];
      for (std::size_t j = 0; j <= 2 * k; ++j) A[r][j] -= f * A[col][j];
    }
  }
  std::vector<double> beta(k), se(k);
  for (std::size_t i = 0; i < k; ++i) beta[i] = A[i][2 * k];
  double rss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0;
    for (std::size_t j = 0; j < k; ++j) fit += X[r * k + j] * beta[j];
    rss += (y[r] - fit) * (y[r] - fit);
  }
  const double s2 = rss / static_cast<double>(n - k);
  for (std::size_t i = 0; i < k; ++i) se[i] = std::sqrt(s2 * A[i][k + i]);
  return {beta, se};
}

/// Paired t by the textbook two-pass formula on before - after.
inline double oracle_paired_t(const std::vector<double>& before, const std::vector<double>& after) {
  const std::size_t n = before.size();
  long double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += before[i] - after[i];
  const long double m = sum / n;
  long double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double d = before[i] - after[i] - m;
    ss += d * d;
  }
  const long double sd = std::sqrt(ss / (n - 1));
  return static_cast<double>(m / (sd / std::sqrt(static_cast<long double>(n))));
}

}  // namespace testing_support
