#include "lpcorp/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "lpcorp/errors.hpp"
#include "lpcorp/version.hpp"

namespace lpcorp::corrector {

namespace {

constexpr double kBiasPenalty = 1e-12;

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(m)) without overflow for large |m|.
double softplus(double m) {
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

void check_training_input(const std::vector<features::FeatureVector>& X,
                          const std::vector<int>& y) {
  if (X.empty()) throw DataError("no training rows for the correction model");
  if (X.size() != y.size()) {
    throw DataError("feature rows and labels disagree in length");
  }
  bool saw0 = false, saw1 = false;
  for (int v : y) {
    if (v == 0) saw0 = true;
    else if (v == 1) saw1 = true;
    else throw DataError("correctness labels must be 0 or 1");
  }
  if (!saw0 || !saw1) {
    throw DataError(
        "correctness labels hold a single class; the correction model needs "
        "both correct and incorrect stage-1 conclusions");
  }
}

// theta = [w..., b]; returns the objective and fills grad.
double eval_packed(const std::vector<features::FeatureVector>& X,
                   const std::vector<double>& yhat, double l2,
                   const std::vector<double>& theta,
                   std::vector<double>& grad) {
  const std::size_t dim = theta.size();
  const std::size_t nb = dim - 1;  // bias slot
  const double inv_n = 1.0 / static_cast<double>(X.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double z = theta[nb];
    for (const auto& [col, val] : X[i].entries) z += theta[col] * val;
    const double m = -yhat[i] * z;
    loss += softplus(m);
    const double coef = -yhat[i] * sigmoid(m);
    for (const auto& [col, val] : X[i].entries) grad[col] += coef * val;
    grad[nb] += coef;
  }
  loss *= inv_n;
  for (double& g : grad) g *= inv_n;
  double reg = 0.0;
  for (std::size_t j = 0; j < nb; ++j) {
    reg += theta[j] * theta[j];
    grad[j] += l2 * theta[j];
  }
  loss += 0.5 * l2 * reg;
  loss += 0.5 * kBiasPenalty * theta[nb] * theta[nb];
  grad[nb] += kBiasPenalty * theta[nb];
  return loss;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> to_yhat(const std::vector<int>& y) {
  std::vector<double> yhat(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yhat[i] = y[i] ? 1.0 : -1.0;
  return yhat;
}

}  // namespace

std::vector<LabeledDoc> make_labels(
    const std::vector<reasoner::ReasonedSample>& reasoned,
    const corpus::Dataset& ds) {
  std::unordered_map<std::string, const corpus::Sample*> by_id;
  by_id.reserve(ds.samples.size());
  for (const corpus::Sample& s : ds.samples) by_id.emplace(s.id, &s);

  std::vector<LabeledDoc> out;
  out.reserve(reasoned.size());
  for (const reasoner::ReasonedSample& r : reasoned) {
    if (r.conclusion == reasoner::Conclusion::kNotSure) continue;
    const auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) {
      throw DataError("reasoned sample \"" + r.sample_id +
                      "\" has no matching dataset entry");
    }
    LabeledDoc d;
    d.sample_id = r.sample_id;
    d.doc = features::compose_document(*it->second, r);
    d.s = r.conclusion == reasoner::conclusion_for_label(it->second->label)
              ? 1
              : 0;
    out.push_back(std::move(d));
  }
  return out;
}

double objective(const std::vector<features::FeatureVector>& X,
                 const std::vector<int>& y, const std::vector<double>& w,
                 double b, double l2) {
  check_training_input(X, y);
  std::vector<double> theta = w;
  theta.push_back(b);
  std::vector<double> grad(theta.size());
  return eval_packed(X, to_yhat(y), l2, theta, grad);
}

void gradient(const std::vector<features::FeatureVector>& X,
              const std::vector<int>& y, const std::vector<double>& w,
              double b, double l2, std::vector<double>* gw, double* gb) {
  check_training_input(X, y);
  std::vector<double> theta = w;
  theta.push_back(b);
  std::vector<double> grad(theta.size());
  eval_packed(X, to_yhat(y), l2, theta, grad);
  *gb = grad.back();
  grad.pop_back();
  *gw = std::move(grad);
}

CorrectionModel train(const std::vector<features::FeatureVector>& X,
                      const std::vector<int>& y, const TrainOptions& opts) {
  check_training_input(X, y);
  if (opts.tol <= 0.0) throw UsageError("tol must be positive");
  if (opts.max_iter < 1) throw UsageError("max_iter must be at least 1");
  if (opts.l2_strength && *opts.l2_strength <= 0.0) {
    throw UsageError("l2 strength must be positive");
  }

  const std::size_t n_features = X.front().dimension;
  for (const features::FeatureVector& row : X) {
    if (row.dimension != n_features) {
      throw DataError("feature rows disagree in dimension");
    }
  }
  const double l2 = opts.l2_strength
                        ? *opts.l2_strength
                        : 1.0 / static_cast<double>(X.size());
  const std::vector<double> yhat = to_yhat(y);

  const std::size_t dim = n_features + 1;
  std::vector<double> theta(dim, 0.0), grad(dim), next(dim), next_grad(dim);
  double f = eval_packed(X, yhat, l2, theta, grad);

  // L-BFGS with Armijo backtracking.
  constexpr std::size_t kHistory = 10;
  std::vector<std::vector<double>> hist_s, hist_y;
  std::vector<double> hist_rho;
  std::vector<double> p(dim), alpha;
  int iterations = 0;

  while (inf_norm(grad) > opts.tol) {
    if (iterations >= opts.max_iter) {
      throw DataError(
          "correction model did not converge in " +
          std::to_string(opts.max_iter) + " iterations (gradient norm " +
          std::to_string(inf_norm(grad)) + ", tol " +
          std::to_string(opts.tol) + ")");
    }

    p = grad;
    alpha.assign(hist_s.size(), 0.0);
    for (std::size_t k = hist_s.size(); k-- > 0;) {
      alpha[k] = hist_rho[k] * dot(hist_s[k], p);
      for (std::size_t j = 0; j < dim; ++j) p[j] -= alpha[k] * hist_y[k][j];
    }
    if (!hist_s.empty()) {
      const double yy = dot(hist_y.back(), hist_y.back());
      const double gamma = dot(hist_s.back(), hist_y.back()) / yy;
      for (double& v : p) v *= gamma;
    }
    for (std::size_t k = 0; k < hist_s.size(); ++k) {
      const double beta = hist_rho[k] * dot(hist_y[k], p);
      for (std::size_t j = 0; j < dim; ++j) {
        p[j] += (alpha[k] - beta) * hist_s[k][j];
      }
    }
    for (double& v : p) v = -v;

    double gp = dot(grad, p);
    if (!(gp < 0.0)) {  // not a descent direction; fall back to steepest
      for (std::size_t j = 0; j < dim; ++j) p[j] = -grad[j];
      gp = -dot(grad, grad);
      hist_s.clear();
      hist_y.clear();
      hist_rho.clear();
    }

    double step = 1.0;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < dim; ++j) next[j] = theta[j] + step * p[j];
      fn = eval_packed(X, yhat, l2, next, next_grad);
      if (fn <= f + 1e-4 * step * gp) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iterations;
    if (!accepted) {
      if (hist_s.empty()) break;  // stalled; the tol check below decides
      hist_s.clear();
      hist_y.clear();
      hist_rho.clear();
      continue;
    }

    std::vector<double> s(dim), yv(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      s[j] = next[j] - theta[j];
      yv[j] = next_grad[j] - grad[j];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-18) {
      hist_s.push_back(std::move(s));
      hist_y.push_back(std::move(yv));
      hist_rho.push_back(1.0 / sy);
      if (hist_s.size() > kHistory) {
        hist_s.erase(hist_s.begin());
        hist_y.erase(hist_y.begin());
        hist_rho.erase(hist_rho.begin());
      }
    }
    theta.swap(next);
    grad.swap(next_grad);
    f = fn;
  }

  const double gnorm = inf_norm(grad);
  if (gnorm > opts.tol) {
    throw DataError("correction model line search stalled at gradient norm " +
                    std::to_string(gnorm) + " (tol " +
                    std::to_string(opts.tol) + ")");
  }

  CorrectionModel model;
  model.weights.assign(theta.begin(), theta.end() - 1);
  model.bias = theta.back();
  model.l2_strength = l2;
  model.tol = opts.tol;
  model.max_iter = opts.max_iter;
  model.iterations = iterations;
  model.final_grad_norm = gnorm;
  return model;
}

double predict_correct(const CorrectionModel& model,
                       const features::FeatureVector& x) {
  if (x.dimension != model.weights.size()) {
    throw DataError("feature vector has " + std::to_string(x.dimension) +
                    " columns but the correction model expects " +
                    std::to_string(model.weights.size()));
  }
  return sigmoid(x.dot_dense(model.weights) + model.bias);
}

CorrectionDecision apply_correction(const reasoner::ReasonedSample& reasoned,
                                    double p_correct, double P) {
  if (!(P >= 0.5) || !(P < 1.0)) {
    throw UsageError("probability threshold must lie in [0.5, 1)");
  }
  if (reasoned.conclusion == reasoner::Conclusion::kNotSure) {
    throw DataError("cannot correct sample \"" + reasoned.sample_id +
                    "\": stage 1 reached no conclusion");
  }
  CorrectionDecision d;
  d.sample_id = reasoned.sample_id;
  d.p_correct = p_correct;
  d.flipped = (1.0 - p_correct) >= P;
  d.flagged = std::max(p_correct, 1.0 - p_correct) >= P;
  d.final_conclusion =
      d.flipped ? reasoner::flip(reasoned.conclusion) : reasoned.conclusion;
  return d;
}

void save_model(const CorrectionModel& model, const std::string& path) {
  nlohmann::json j;
  j["kind"] = "correction";
  j["file_version"] = kCorrectionFileVersion;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["l2_strength"] = model.l2_strength;
  j["tol"] = model.tol;
  j["max_iter"] = model.max_iter;
  j["iterations"] = model.iterations;
  j["final_grad_norm"] = model.final_grad_norm;
  j["vectorizer_fingerprint"] = model.vectorizer_fingerprint;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed while writing " + path);
}

CorrectionModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": not a valid correction model file: " + e.what());
  }
  try {
    if (j.value("kind", "") != "correction") {
      throw DataError(path + ": not a correction model file");
    }
    const int ver = j.at("file_version").get<int>();
    if (ver != kCorrectionFileVersion) {
      throw DataError(path + ": correction model file version " +
                      std::to_string(ver) + " is not supported (expected " +
                      std::to_string(kCorrectionFileVersion) + ")");
    }
    CorrectionModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.l2_strength = j.at("l2_strength").get<double>();
    m.tol = j.at("tol").get<double>();
    m.max_iter = j.at("max_iter").get<int>();
    m.iterations = j.value("iterations", 0);
    m.final_grad_norm = j.value("final_grad_norm", 0.0);
    m.vectorizer_fingerprint = j.value("vectorizer_fingerprint", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed correction model file: " + e.what());
  }
}

void require_match(const CorrectionModel& model,
                   const features::TfidfModel& vec) {
  const std::string fp = features::fingerprint(vec);
  if (model.vectorizer_fingerprint != fp) {
    throw DataError("correction model was trained with vectorizer " +
                    model.vectorizer_fingerprint +
                    " but the loaded vectorizer is " + fp);
  }
  if (model.weights.size() != vec.dimension()) {
    throw DataError("correction model width " +
                    std::to_string(model.weights.size()) +
                    " does not match vectorizer vocabulary size " +
                    std::to_string(vec.dimension()));
  }
}

}  // namespace lpcorp::corrector
