// The alternating training loop: per batch, a reconstruction update of the
// autoencoder followed by a classification update of the classifier head
// (and, in joint mode, the encoder). Tracks per-epoch stats and keeps the
// weights of the best validation epoch.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "csae/data.hpp"
#include "csae/model.hpp"
#include "csae/optim.hpp"

namespace csae {

// whether the classification sub-step updates the encoder too (joint) or
// only the classifier head (head_only, the ablation setting)
enum class UpdateMode { joint, head_only };

struct TrainConfig {
    int epochs = 200;
    int batch_size = 128;
    std::uint32_t seed = 0;
    LrSchedule lr_schedule;
    UpdateMode update_mode = UpdateMode::joint;
    float val_fraction = 0.10f;
};

struct EpochStats {
    int epoch = 0;
    double recon_loss = 0.0;
    double cls_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    float lr = 0.0f;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;          // earliest epoch attaining the max val accuracy
    double best_val_acc = 0.0;
    double wall_seconds = 0.0;
};

// Shuffled mini-batches over a dataset; the final partial batch is kept.
// Shuffling consumes the caller's generator, so successive iterators over
// the same generator see different permutations.
class BatchIterator {
public:
    BatchIterator(const LabeledDataset& dataset, int batch_size, std::mt19937& rng);

    int batch_count() const { return static_cast<int>(batches_.size()); }
    std::pair<Tensor, std::vector<int>> batch(int i) const;

private:
    const LabeledDataset& dataset_;
    std::vector<std::vector<int>> batches_;
};

// one reconstruction update over a batch; returns the MSE loss
double reconstruction_substep(CsaeModel& model, const Tensor& x, AdamState& opt);

struct ClassificationStats {
    double loss = 0.0;
    int correct = 0;
};

// one classification update over a batch
ClassificationStats classification_substep(CsaeModel& model, const Tensor& x,
                                           const std::vector<int>& y, AdamState& opt,
                                           UpdateMode mode);

// Full training protocol: carve out the validation split once (seeded with
// config.seed), then run config.epochs alternating epochs and return a copy
// of the weights at the best validation accuracy.
std::pair<CsaeModel, TrainReport> train(const CsaeModel& model, const LabeledDataset& train_set,
                                        const TrainConfig& config);

struct EvalResult {
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    double recon_loss = 0.0;
    double cls_loss = 0.0;
};

// accuracy, weighted F1 and mean losses over a dataset; weights untouched
EvalResult evaluate(const CsaeModel& model, const LabeledDataset& dataset);

std::vector<int> predict(const CsaeModel& model, const Tensor& images, int batch_size = 256);

// per-epoch stats as CSV: epoch,recon_loss,cls_loss,train_acc,val_acc,lr
void write_report_csv(const TrainReport& report, const std::string& path);

}  // namespace csae
