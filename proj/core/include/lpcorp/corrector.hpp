#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpcorp/corpus.hpp"
#include "lpcorp/features.hpp"
#include "lpcorp/reasoner.hpp"

namespace lpcorp::corrector {

// One stage-2 training example: the composed document and whether the
// stage-1 conclusion matched ground truth (s=1 means it did).
struct LabeledDoc {
  std::string sample_id;
  std::string doc;
  int s = 0;
};

// Pairs every decided (not "not sure") reasoned sample with its composed
// document and correctness label. Throws DataError when a reasoned id has
// no matching dataset sample.
std::vector<LabeledDoc> make_labels(
    const std::vector<reasoner::ReasonedSample>& reasoned,
    const corpus::Dataset& ds);

struct TrainOptions {
  // L2 strength on the weights; defaults to 1/n when unset.
  std::optional<double> l2_strength;
  double tol = 1e-6;  // on the gradient infinity norm
  int max_iter = 1000;
  // Accepted for interface stability; the zero-initialized convex solve is
  // deterministic and never draws from it.
  std::uint64_t seed = 0;
};

struct CorrectionModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2_strength = 0.0;
  double tol = 1e-6;
  int max_iter = 1000;
  int iterations = 0;
  double final_grad_norm = 0.0;
  // Hash of the vocabulary this model was trained against; loaders refuse
  // to score with a different vectorizer.
  std::string vectorizer_fingerprint;
};

// Regularized logistic loss (1/n)·sum log(1+exp(-yhat*z)) + (l2/2)|w|^2
// with z = w·x + b and yhat in {-1,+1} mapped from s in {0,1}. The bias
// carries a 1e-12 penalty so the objective stays strictly convex.
double objective(const std::vector<features::FeatureVector>& X,
                 const std::vector<int>& y, const std::vector<double>& w,
                 double b, double l2);

void gradient(const std::vector<features::FeatureVector>& X,
              const std::vector<int>& y, const std::vector<double>& w,
              double b, double l2, std::vector<double>* gw, double* gb);

// L-BFGS from zero init until the gradient infinity norm is <= tol.
// Throws DataError when y holds a single class or the solver runs out of
// iterations (the message carries the final gradient norm).
CorrectionModel train(const std::vector<features::FeatureVector>& X,
                      const std::vector<int>& y,
                      const TrainOptions& opts = {});

// P(S=1|x) = sigmoid(w·x + b). Throws DataError on dimension mismatch.
double predict_correct(const CorrectionModel& model,
                       const features::FeatureVector& x);

struct CorrectionDecision {
  std::string sample_id;
  double p_correct = 0.0;
  bool flipped = false;
  bool flagged = false;
  reasoner::Conclusion final_conclusion = reasoner::Conclusion::kNotSure;
};

// Flip iff P(S=0|x) = 1-p_correct >= P; flag iff max(p, 1-p) >= P. At
// P=0.5 this is the argmax rule and every sample is flagged. Throws
// UsageError for P outside [0.5, 1) and DataError for a not-sure input.
CorrectionDecision apply_correction(const reasoner::ReasonedSample& reasoned,
                                    double p_correct, double P);

void save_model(const CorrectionModel& model, const std::string& path);
CorrectionModel load_model(const std::string& path);

// Throws DataError when the model's fingerprint differs from vec's.
void require_match(const CorrectionModel& model,
                   const features::TfidfModel& vec);

}  // namespace lpcorp::corrector
