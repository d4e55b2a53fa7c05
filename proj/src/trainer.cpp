#include "csae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "csae/losses.hpp"
#include "csae/metrics.hpp"
#include "csae/rng.hpp"

namespace csae {

BatchIterator::BatchIterator(const LabeledDataset& dataset, int batch_size, std::mt19937& rng)
    : dataset_(dataset) {
    if (dataset.count() < 1) throw std::invalid_argument("batch_iterator: empty dataset");
    if (batch_size < 1) throw std::invalid_argument("batch_iterator: batch_size must be >= 1");
    const std::vector<int> order = shuffled_indices(dataset.count(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        batches_.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
    }
}

std::pair<Tensor, std::vector<int>> BatchIterator::batch(int i) const {
    const LabeledDataset part = gather(dataset_, batches_[static_cast<std::size_t>(i)]);
    return {part.images, part.labels};
}

namespace {

void apply_updates(Sequential& net, const std::vector<ParamGrads>& grads, const AdamState& opt) {
    for (int i = 0; i < net.layer_count(); ++i)
        if (net.specs[static_cast<std::size_t>(i)].has_params())
            adam_apply(net.params[static_cast<std::size_t>(i)],
                       grads[static_cast<std::size_t>(i)], opt);
}

}  // namespace

double reconstruction_substep(CsaeModel& model, const Tensor& x, AdamState& opt) {
    ForwardTraceT<float> enc_trace, dec_trace;
    const Tensor z = seq_forward(model.encoder, x, &enc_trace);
    const Tensor x_hat = seq_forward(model.decoder, z, &dec_trace);

    auto [loss, grad] = mse_loss(x_hat, x);

    std::vector<ParamGrads> dec_grads, enc_grads;
    Tensor gz = seq_backward(model.decoder, dec_trace, std::move(grad), dec_grads, true);
    seq_backward(model.encoder, enc_trace, std::move(gz), enc_grads, false);

    opt.t += 1;
    apply_updates(model.encoder, enc_grads, opt);
    apply_updates(model.decoder, dec_grads, opt);
    return loss;
}

ClassificationStats classification_substep(CsaeModel& model, const Tensor& x,
                                           const std::vector<int>& y, AdamState& opt,
                                           UpdateMode mode) {
    ForwardTraceT<float> enc_trace, cls_trace;
    const Tensor z = seq_forward(model.encoder, x, &enc_trace);
    const Tensor probs = seq_forward(model.classifier, z, &cls_trace);

    ClassificationStats stats;
    const std::vector<int> pred = argmax_rows(probs);
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++stats.correct;

    // fused softmax/cross-entropy gradient, so backprop starts below the
    // trailing softmax layer
    auto [loss, logit_grad] = categorical_crossentropy(probs, y);
    stats.loss = loss;

    const bool into_encoder = mode == UpdateMode::joint;
    std::vector<ParamGrads> cls_grads;
    Tensor gz = seq_backward(model.classifier, cls_trace, std::move(logit_grad), cls_grads,
                             into_encoder, model.classifier.layer_count() - 2);

    opt.t += 1;
    if (into_encoder) {
        std::vector<ParamGrads> enc_grads;
        seq_backward(model.encoder, enc_trace, std::move(gz), enc_grads, false);
        apply_updates(model.encoder, enc_grads, opt);
    }
    apply_updates(model.classifier, cls_grads, opt);
    return stats;
}

std::pair<CsaeModel, TrainReport> train(const CsaeModel& model, const LabeledDataset& train_set,
                                        const TrainConfig& config) {
    const auto start = std::chrono::steady_clock::now();

    SplitSpec split_spec;
    split_spec.val_fraction = config.val_fraction;
    split_spec.seed = config.seed;
    const Splits parts = split(train_set, split_spec);

    CsaeModel current = model;
    CsaeModel best = model;
    TrainReport report;
    report.best_val_acc = -1.0;

    AdamState opt_ae, opt_cls;
    // batch order stream is independent of the split seed
    std::mt19937 shuffle_rng(config.seed ^ 0x517cc1b7u);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const float lr = lr_at_epoch(config.lr_schedule, epoch);
        opt_ae.alpha = lr;
        opt_cls.alpha = lr;

        BatchIterator batches(parts.train, config.batch_size, shuffle_rng);
        double recon_sum = 0.0, cls_sum = 0.0;
        std::int64_t seen = 0, correct = 0;
        for (int b = 0; b < batches.batch_count(); ++b) {
            auto [x, y] = batches.batch(b);
            double recon;
            ClassificationStats cls;
            try {
                recon = reconstruction_substep(current, x, opt_ae);
                cls = classification_substep(current, x, y, opt_cls, config.update_mode);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("training aborted at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(b) + ": " + e.what());
            }
            if (!std::isfinite(recon) || !std::isfinite(cls.loss))
                throw std::runtime_error("training aborted at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(b) + ": non-finite loss");
            const auto n = static_cast<double>(y.size());
            recon_sum += recon * n;
            cls_sum += cls.loss * n;
            correct += cls.correct;
            seen += static_cast<std::int64_t>(y.size());
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.recon_loss = recon_sum / static_cast<double>(seen);
        stats.cls_loss = cls_sum / static_cast<double>(seen);
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        stats.val_acc = evaluate(current, parts.val).accuracy;
        report.epochs.push_back(stats);

        if (stats.val_acc > report.best_val_acc) {  // ties keep the earlier epoch
            report.best_val_acc = stats.val_acc;
            report.best_epoch = epoch;
            best = current;
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(best), std::move(report)};
}

EvalResult evaluate(const CsaeModel& model, const LabeledDataset& dataset) {
    const int n = dataset.count();
    if (n < 1) throw std::invalid_argument("evaluate: empty dataset");
    constexpr int kEvalBatch = 256;

    EvalResult result;
    std::vector<int> predictions;
    predictions.reserve(static_cast<std::size_t>(n));
    double recon_sum = 0.0, cls_sum = 0.0;
    for (int start = 0; start < n; start += kEvalBatch) {
        const int end = std::min(n, start + kEvalBatch);
        std::vector<int> idx(static_cast<std::size_t>(end - start));
        for (int i = start; i < end; ++i) idx[static_cast<std::size_t>(i - start)] = i;
        const LabeledDataset part = gather(dataset, idx);

        const Tensor z = encode(model, part.images);
        const Tensor x_hat = decode(model, z);
        recon_sum += static_cast<double>(mse_loss(x_hat, part.images).first) * (end - start);

        const Tensor probs = classify_latent(model, z);
        cls_sum += static_cast<double>(categorical_crossentropy(probs, part.labels).first) *
                   (end - start);
        for (int p : argmax_rows(probs)) predictions.push_back(p);
    }
    result.recon_loss = recon_sum / n;
    result.cls_loss = cls_sum / n;
    result.accuracy = accuracy(dataset.labels, predictions);
    result.weighted_f1 = weighted_f1(dataset.labels, predictions);
    return result;
}

std::vector<int> predict(const CsaeModel& model, const Tensor& images, int batch_size) {
    const int n = images.dim(0);
    const std::int64_t px = images.size() / n;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        Tensor part({end - start, images.dim(1), images.dim(2), images.dim(3)});
        std::copy(images.data() + start * px, images.data() + end * px, part.data());
        for (int p : argmax_rows(classify(model, part))) out.push_back(p);
    }
    return out;
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open report for writing: " + path);
    os << "epoch,recon_loss,cls_loss,train_acc,val_acc,lr\n";
    char line[256];
    for (const auto& e : report.epochs) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.recon_loss,
                      e.cls_loss, e.train_acc, e.val_acc, static_cast<double>(e.lr));
        os << line;
    }
}

}  // namespace csae
