// Classical classifiers trained on latent representations (or raw flattened
// pixels): brute-force k-NN, Gaussian naive Bayes, and an RBF-kernel SVM
// fitted with sequential minimal optimization, one-vs-one for multi-class.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "csae/data.hpp"
#include "csae/metrics.hpp"
#include "csae/model.hpp"
#include "csae/tensor.hpp"

namespace csae {

struct LatentDataset {
    Tensor z;               // [n, d]
    std::vector<int> y;     // length n

    int count() const { return z.dim(0); }
    int dims() const { return z.dim(1); }
};

// encoder outputs for a whole image set, computed in batches; batching does
// not change any per-sample arithmetic
LatentDataset extract_latent(const CsaeModel& model, const Tensor& images,
                             const std::vector<int>& labels, int batch_size = 256);

// [n,h,w,1] images to [n, h*w] feature rows
Tensor flatten_images(const Tensor& images);

// Majority vote among the k nearest training points by Euclidean distance.
// Distance ties prefer the lower training index; vote ties go to the tied
// class with the nearest member.
std::vector<int> knn_predict(const LatentDataset& train, const Tensor& query, int k = 3);

struct GnbModel {
    int num_classes = 0;
    std::vector<double> log_prior;           // [k]
    std::vector<std::vector<double>> mean;   // [k][d]
    std::vector<std::vector<double>> var;    // [k][d], smoothed
};

// Gaussian naive Bayes with variance smoothing 1e-9 x the largest feature
// variance; every class in [0, max_label] must appear in the training set
GnbModel gnb_fit(const LatentDataset& train);
std::vector<int> gnb_predict(const GnbModel& model, const Tensor& query);

// ---------------------------------------------------------------- SVM ------

struct SmoOptions {
    float c = 1.0f;
    double tol = 1e-3;
    int max_clean_passes = 5;   // consecutive no-change sweeps before stopping
    int pass_cap_factor = 10;   // hard cap: factor * n sweeps
    std::uint32_t seed = 0;
};

struct SmoResult {
    std::vector<double> alpha;
    double b = 0.0;
    bool converged = false;
    int passes = 0;
};

// simplified SMO on a binary problem with labels in {-1,+1}
SmoResult smo_solve(const Tensor& x, const std::vector<int>& y_pm, double gamma,
                    const SmoOptions& opts, std::mt19937& rng);

// decision value sum_i alpha_i y_i K(x_i, q) + b for one query row
double svm_decision_value(const Tensor& x, const std::vector<int>& y_pm,
                          const std::vector<double>& alpha, double b, double gamma,
                          const float* q, int d);

// worst KKT violation over all training points (0 means exactly satisfied)
double svm_kkt_violation(const Tensor& x, const std::vector<int>& y_pm,
                         const std::vector<double>& alpha, double b, double gamma, float c);

struct BinarySvm {
    int class_lo = 0, class_hi = 0;   // lo votes on f<=0, hi on f>0
    Tensor support;                   // [m, d]
    std::vector<float> coef;          // alpha_i * y_i per support vector
    double intercept = 0.0;
    bool converged = true;
};

struct SvmModel {
    std::vector<BinarySvm> machines;  // k(k-1)/2, ordered (0,1),(0,2),...
    double gamma = 0.0;
    float c = 1.0f;
    int num_classes = 0;
};

// one-vs-one RBF SVM; gamma is the "scale" heuristic 1/(d * Var(features)).
// Pairs that hit the pass cap are kept best-so-far with converged=false.
SvmModel svm_fit(const LatentDataset& train, const SmoOptions& opts = {});
std::vector<int> svm_predict(const SvmModel& model, const Tensor& query);

double svm_scale_gamma(const Tensor& x);

// -------------------------------------------------------------- pipeline ---

// per-feature (x - mean)/std using training statistics, std floored at 1e-8;
// returns the transformed (train, apply) pair
std::pair<Tensor, Tensor> standardize(const Tensor& train_x, const Tensor& apply_x);

enum class LatentMethod { knn, gnb, svm };

struct PipelineOptions {
    LatentMethod method = LatentMethod::knn;
    int k = 3;
    bool standardize_latent = false;
    SmoOptions smo;
};

struct PipelineResult {
    std::vector<int> predictions;
    MetricsReport metrics;
    bool svm_converged = true;
};

// Algorithm: encode train and test images, fit the chosen classical
// classifier on the training latents, predict the test latents
PipelineResult pipeline_classify(const CsaeModel& model, const LabeledDataset& train,
                                 const LabeledDataset& test, const PipelineOptions& opts);

// CSV round-trip with header z0,...,z{d-1},label
void write_latent_csv(const LatentDataset& ds, const std::string& path);
LatentDataset read_latent_csv(const std::string& path);

}  // namespace csae
