#include "envclass/glmfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "envclass/error.hpp"
#include "envclass/stats.hpp"

namespace envclass {

using nlohmann::json;

namespace {

double log1p_exp(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Error separation_error(const std::string& detail) {
  return Error(ErrorKind::Separation,
               "logistic fit: " + detail +
                   "; the classes are (quasi-)completely separated and the maximum-likelihood estimate does not "
                   "exist. Drop the separating feature(s) or use fewer features.");
}

bool strictly_separates(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (y[i] > 0.5 ? !(eta[i] > 0.0) : !(eta[i] < 0.0)) return false;
  }
  return true;
}

}  // namespace

double logistic_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1p_exp(eta[i]);
  return ll;
}

Eigen::VectorXd logistic_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[i] - sigmoid(eta[i]);
  return x.transpose() * resid;
}

GlmFit irls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> terms,
                const IrlsOptions& opt) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (static_cast<Eigen::Index>(terms.size()) != p) throw invariant_error("term names do not match design columns");
  if (y.size() != n) throw invariant_error("response length does not match design rows");
  if (p == 0) throw Error(ErrorKind::Rank, "logistic fit: empty design");
  if (n <= p) throw data_error("logistic fit needs more rows than parameters");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw invariant_error("logistic response must be 0/1");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    if (terms[static_cast<std::size_t>(j)] == "(Intercept)") continue;
    if (x.col(j).maxCoeff() == x.col(j).minCoeff()) {
      throw Error(ErrorKind::Rank, "logistic fit: column '" + terms[static_cast<std::size_t>(j)] + "' is constant");
    }
  }
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(x.transpose() * x);
    if (lu.rank() < p) throw Error(ErrorKind::Rank, "logistic fit: design matrix is rank deficient");
  }

  GlmFit fit;
  fit.terms = std::move(terms);
  fit.n = static_cast<std::size_t>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = logistic_log_likelihood(x, y, beta);
  fit.loglik_trace.push_back(ll);
  Eigen::VectorXd score = logistic_score(x, y, beta);
  bool converged = false;
  std::size_t it = 0;
  for (; it <= opt.max_iterations; ++it) {
    if (score.cwiseAbs().maxCoeff() < opt.score_tolerance) {
      converged = true;
      break;
    }
    if (it == opt.max_iterations) break;
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = sigmoid(eta[i]);
      w[i] = mu * (1.0 - mu);
    }
    const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
      if (strictly_separates(eta, y)) throw separation_error("fitted probabilities reached 0 or 1");
      throw Error(ErrorKind::Rank, "logistic fit: information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(score);
    // Rounding noise near the optimum must not trigger halving.
    const double slack = 1e-12 * (1.0 + std::fabs(ll));
    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    double ll_next = logistic_log_likelihood(x, y, next);
    for (std::size_t h = 0; h < opt.max_halvings && !(ll_next >= ll - slack); ++h) {
      scale *= 0.5;
      next = beta + scale * step;
      ll_next = logistic_log_likelihood(x, y, next);
    }
    if (!(ll_next >= ll - slack)) break;  // no ascent possible at machine precision
    beta = next;
    ll = ll_next;
    fit.loglik_trace.push_back(ll);
    if (beta.cwiseAbs().maxCoeff() > opt.separation_bound) throw separation_error("coefficients diverged");
    score = logistic_score(x, y, beta);
  }
  fit.iterations = it;
  fit.max_abs_score = score.cwiseAbs().maxCoeff();
  if (strictly_separates(x * beta, y)) throw separation_error("the linear predictor classifies every row exactly");
  if (!converged) {
    throw Error(ErrorKind::Convergence, "logistic fit did not converge (max |score| = " +
                                            std::to_string(fit.max_abs_score) + ")");
  }

  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = sigmoid(eta[i]);
    w[i] = mu * (1.0 - mu);
  }
  const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) throw Error(ErrorKind::Rank, "logistic fit: information matrix is singular");
  const Eigen::MatrixXd cov = lu.inverse();

  fit.log_likelihood = ll;
  fit.aic = 2.0 * static_cast<double>(p) - 2.0 * ll;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(cov(j, j));
    const double z = beta[j] / se;
    fit.coefficients.push_back(beta[j]);
    fit.std_errors.push_back(se);
    fit.z_values.push_back(z);
    fit.p_values.push_back(wald_p(z));
  }
  for (const auto& t : fit.terms) {
    if (t != "(Intercept)") fit.included_features.push_back(t);
  }
  return fit;
}

double wald_p(double z) { return two_sided_normal_p(z); }

CorrelationScreen correlation_screen(const FeatureMatrix& matrix, std::span<const Feature> candidates,
                                     double max_abs_r) {
  CorrelationScreen s;
  s.max_abs_r = max_abs_r;
  std::vector<std::vector<double>> cols;
  for (auto f : candidates) {
    auto c = matrix.column(f);
    if (c.size() < 2 || std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); })) {
      s.constant_features.push_back(f);
      continue;
    }
    const double m = mean(c);
    double norm = 0.0;
    for (auto& v : c) {
      v -= m;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : c) v /= norm;
    s.features.push_back(f);
    cols.push_back(std::move(c));
  }
  const auto k = static_cast<Eigen::Index>(s.features.size());
  s.correlation = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      double r = 0.0;
      const auto& ca = cols[static_cast<std::size_t>(a)];
      const auto& cb = cols[static_cast<std::size_t>(b)];
      for (std::size_t i = 0; i < ca.size(); ++i) r += ca[i] * cb[i];
      r = std::clamp(r, -1.0, 1.0);
      s.correlation(a, b) = r;
      s.correlation(b, a) = r;
    }
  }
  // Subsets by increasing size, then lexicographic within a size.
  const std::size_t m = s.features.size();
  std::vector<std::vector<std::size_t>> subsets;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    bool ok = true;
    for (std::size_t a = 0; a < idx.size() && ok; ++a) {
      for (std::size_t b = a + 1; b < idx.size() && ok; ++b) {
        ok = std::fabs(s.correlation(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]))) < max_abs_r;
      }
    }
    if (ok) subsets.push_back(std::move(idx));
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  for (const auto& idx : subsets) {
    std::vector<Feature> fs;
    for (auto i : idx) fs.push_back(s.features[i]);
    s.admissible.push_back(std::move(fs));
  }
  return s;
}

std::string display_name(Feature f) {
  switch (f) {
    case kMeanSpeed: return "Ped mean speed";
    case kStopFraction: return "Ped stop fraction";
    case kVariability: return "Ped variability";
    case kPathEfficiency: return "Ped path efficiency";
    case kOrientationEntropy: return "Ped orientation entropy";
    case kAvgDensity: return "Ped average density";
    case kAvgStandingDensity: return "Ped standing density";
    default: return std::string(feature_names()[f]);
  }
}

SelectionResult screen_and_select(const FeatureMatrix& raw, const std::vector<ClusterLabel>& labels,
                                  const SelectionOptions& opt) {
  if (labels.size() != raw.rows.size()) throw invariant_error("label count does not match row count");
  if (opt.candidates.empty()) throw config_error("GLM selection needs at least one candidate feature");
  FeatureMatrix used;
  std::vector<double> yv;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == ClusterLabel::Unresolved) continue;
    used.rows.push_back(raw.rows[i]);
    const bool is_a = labels[i] == ClusterLabel::A;
    yv.push_back(is_a == opt.unstructured_is_one ? 1.0 : 0.0);
  }
  if (used.rows.size() < 2) throw data_error("GLM needs at least 2 labelled rows");
  const auto centered = center(used);

  SelectionResult res;
  res.unstructured_is_one = opt.unstructured_is_one;
  res.rows_used = used.rows.size();
  res.screen = correlation_screen(centered, opt.candidates, opt.max_abs_r);
  if (res.screen.admissible.empty()) throw data_error("no admissible feature subset (all candidates constant)");

  const auto n = static_cast<Eigen::Index>(centered.rows.size());
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), n);
  const GlmFit* best = nullptr;
  const std::vector<Feature>* best_fs = nullptr;
  std::string first_error;
  for (const auto& fs : res.screen.admissible) {
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(fs.size()) + 1);
    std::vector<std::string> terms = {"(Intercept)"};
    x.col(0).setOnes();
    for (std::size_t j = 0; j < fs.size(); ++j) {
      for (Eigen::Index i = 0; i < n; ++i) x(i, static_cast<Eigen::Index>(j) + 1) = centered.rows[static_cast<std::size_t>(i)].values[fs[j]];
      terms.emplace_back(feature_names()[fs[j]]);
    }
    SubsetFit sf;
    sf.features = fs;
    try {
      sf.fit = irls_fit(x, y, std::move(terms), opt.irls);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Separation && e.kind() != ErrorKind::Rank && e.kind() != ErrorKind::Convergence &&
          e.kind() != ErrorKind::Data) {
        throw;
      }
      sf.error = e.what();
      if (first_error.empty()) first_error = e.what();
    }
    res.fits.push_back(std::move(sf));
  }
  for (const auto& sf : res.fits) {
    if (!sf.fit) continue;
    if (!best) {
      best = &*sf.fit;
      best_fs = &sf.features;
      continue;
    }
    const double d = sf.fit->aic - best->aic;
    // Enumeration order already puts smaller, then lexicographically earlier, subsets first.
    if (d < -1e-9) {
      best = &*sf.fit;
      best_fs = &sf.features;
    }
  }
  if (!best) {
    const bool all_separated = std::all_of(res.fits.begin(), res.fits.end(), [](const SubsetFit& f) {
      return f.error.find("separated") != std::string::npos;
    });
    throw Error(all_separated ? ErrorKind::Separation : ErrorKind::Data,
                "no admissible feature subset could be fitted: " + first_error);
  }
  res.best = *best;
  res.best_features = *best_fs;
  return res;
}

namespace {

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return ".";
  return "";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string format_glm_table(const GlmFit& fit, bool unstructured_is_one) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-26s %10s %11s %9s  %s\n", "Fixed effects", "Estimate", "Std. Error", "z value",
                "Pr(>|z|)");
  os << line;
  for (std::size_t j = 0; j < fit.terms.size(); ++j) {
    if (fit.terms[j] == "(Intercept)") continue;
    std::string name = fit.terms[j];
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (feature_names()[f] == name) name = display_name(static_cast<Feature>(f));
    }
    const double p = fit.p_values[j];
    std::string ps = p < 0.001 ? "<0.001" : fmt("%.3f", p);
    const auto st = stars(p);
    if (!st.empty()) ps += " (" + st + ")";
    std::snprintf(line, sizeof line, "%-26s %10.3f %11.3f %9.3f  %s\n", name.c_str(), fit.coefficients[j],
                  fit.std_errors[j], fit.z_values[j], ps.c_str());
    os << line;
  }
  for (std::size_t j = 0; j < fit.terms.size(); ++j) {
    if (fit.terms[j] == "(Intercept)") {
      os << "Intercept: " << fmt("%.3f", fit.coefficients[j]) << " (SE " << fmt("%.3f", fit.std_errors[j]) << ")\n";
    }
  }
  os << "AIC = " << fmt("%.2f", fit.aic) << ", log-likelihood = " << fmt("%.3f", fit.log_likelihood)
     << ", n = " << fit.n << "\n";
  os << (unstructured_is_one ? "Encoding: cluster A (unstructured) = 1, cluster B (structured) = 0; "
                               "flip every sign for the opposite encoding.\n"
                             : "Encoding: cluster B (structured) = 1, cluster A (unstructured) = 0; "
                               "flip every sign for the opposite encoding.\n");
  return os.str();
}

std::string glm_to_json(const SelectionResult& r) {
  auto fit_json = [](const GlmFit& f) {
    json terms = json::array();
    for (std::size_t j = 0; j < f.terms.size(); ++j) {
      terms.push_back({{"term", f.terms[j]},
                       {"estimate", f.coefficients[j]},
                       {"std_error", f.std_errors[j]},
                       {"z_value", f.z_values[j]},
                       {"p_value", f.p_values[j]},
                       {"estimate_opposite_encoding", -f.coefficients[j]}});
    }
    return json{{"terms", terms},       {"log_likelihood", f.log_likelihood}, {"aic", f.aic},
                {"n", f.n},             {"iterations", f.iterations},         {"max_abs_score", f.max_abs_score},
                {"included_features", f.included_features}};
  };
  json j;
  j["encoding"] = r.unstructured_is_one ? "A(unstructured)=1,B(structured)=0" : "B(structured)=1,A(unstructured)=0";
  j["rows_used"] = r.rows_used;
  j["best"] = fit_json(r.best);
  json screen;
  std::vector<std::string> names;
  for (auto f : r.screen.features) names.emplace_back(feature_names()[f]);
  screen["features"] = names;
  std::vector<std::string> constant;
  for (auto f : r.screen.constant_features) constant.emplace_back(feature_names()[f]);
  screen["constant_features"] = constant;
  screen["max_abs_r"] = r.screen.max_abs_r;
  json corr = json::array();
  for (Eigen::Index a = 0; a < r.screen.correlation.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < r.screen.correlation.cols(); ++b) row.push_back(r.screen.correlation(a, b));
    corr.push_back(row);
  }
  screen["correlation"] = corr;
  j["screen"] = screen;
  json fits = json::array();
  for (const auto& sf : r.fits) {
    std::vector<std::string> fs;
    for (auto f : sf.features) fs.emplace_back(feature_names()[f]);
    json e{{"features", fs}};
    if (sf.fit) {
      e["aic"] = sf.fit->aic;
      json est = json::object();
      for (std::size_t t = 0; t < sf.fit->terms.size(); ++t) est[sf.fit->terms[t]] = sf.fit->coefficients[t];
      e["estimates"] = est;
    } else {
      e["error"] = sf.error;
    }
    fits.push_back(e);
  }
  j["subsets"] = fits;
  return j.dump(2) + "\n";
}

}  // namespace envclass
