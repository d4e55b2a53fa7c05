// csae command-line tool: train and evaluate models, extract latent codes,
// run classical classifiers on them, and export visualization artifacts.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csae/classifiers.hpp"
#include "csae/data.hpp"
#include "csae/gradcheck.hpp"
#include "csae/model.hpp"
#include "csae/trainer.hpp"
#include "csae/viz.hpp"

namespace {

void print_metric(const char* name, double value) {
    std::printf("%-14s %.6f\n", name, value);
    std::printf("{\"metric\": \"%s\", \"value\": %.9g}\n", name, value);
}

csae::LabeledDataset load_dataset(const std::string& images, const std::string& labels) {
    return csae::to_labeled(csae::load_idx(images, labels));
}

int infer_num_classes(const std::vector<int>& labels) {
    int k = 0;
    for (int label : labels) k = std::max(k, label + 1);
    return std::max(k, 2);
}

csae::LabeledDataset shuffled_subset(const csae::LabeledDataset& ds, int n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<int> order = csae::shuffled_indices(ds.count(), rng);
    order.resize(static_cast<std::size_t>(std::min<int>(n, ds.count())));
    return csae::gather(ds, order);
}

struct Options {
    std::string preset = "small28";
    int lambda = 2;
    int epochs = 200;
    int batch_size = 128;
    std::uint32_t seed = 0;
    std::string update_mode = "joint";
    std::string images, labels, test_images, test_labels;
    std::string checkpoint, out;
    std::string method = "knn";
    int k = 3;
    bool standardize_latent = false;
    int resolution = 0;
    int tile = 0;
    int subset = 0;
};

int run_train(const Options& opt) {
    csae::LabeledDataset data = load_dataset(opt.images, opt.labels);
    if (opt.subset > 0) data = shuffled_subset(data, opt.subset, opt.seed);

    const int num_classes = infer_num_classes(data.labels);
    csae::CsaeModel model =
        csae::build_csae(csae::make_preset(opt.preset, opt.lambda, num_classes), opt.seed);

    csae::TrainConfig config;
    config.epochs = opt.epochs;
    config.batch_size = opt.batch_size;
    config.seed = opt.seed;
    config.update_mode =
        opt.update_mode == "head_only" ? csae::UpdateMode::head_only : csae::UpdateMode::joint;

    std::printf("training %s lambda=%d classes=%d on %d samples, %d epochs (%s mode)\n",
                opt.preset.c_str(), opt.lambda, num_classes, data.count(), opt.epochs,
                opt.update_mode.c_str());
    auto [best, report] = csae::train(model, data, config);

    if (!opt.checkpoint.empty()) {
        csae::save_checkpoint(best, opt.checkpoint);
        std::printf("checkpoint written to %s\n", opt.checkpoint.c_str());
    }
    if (!opt.out.empty()) {
        csae::write_report_csv(report, opt.out);
        std::printf("training report written to %s\n", opt.out.c_str());
    }
    std::printf("best epoch %d, wall time %.1fs\n", report.best_epoch, report.wall_seconds);
    print_metric("best_val_acc", report.best_val_acc);

    if (!opt.test_images.empty() && !opt.test_labels.empty()) {
        const csae::EvalResult r =
            csae::evaluate(best, load_dataset(opt.test_images, opt.test_labels));
        print_metric("test_accuracy", r.accuracy);
        print_metric("test_weighted_f1", r.weighted_f1);
    }
    return 0;
}

int run_eval(const Options& opt) {
    const csae::CsaeModel model = csae::load_checkpoint(opt.checkpoint);
    const csae::EvalResult r =
        csae::evaluate(model, load_dataset(opt.test_images, opt.test_labels));
    print_metric("accuracy", r.accuracy);
    print_metric("weighted_f1", r.weighted_f1);
    print_metric("recon_loss", r.recon_loss);
    print_metric("cls_loss", r.cls_loss);
    return 0;
}

int run_extract_latent(const Options& opt) {
    const csae::CsaeModel model = csae::load_checkpoint(opt.checkpoint);
    const csae::LabeledDataset data = load_dataset(opt.images, opt.labels);
    const csae::LatentDataset latents =
        csae::extract_latent(model, data.images, data.labels);
    csae::write_latent_csv(latents, opt.out);
    std::printf("%d latent rows (d=%d) written to %s\n", latents.count(), latents.dims(),
                opt.out.c_str());
    return 0;
}

int run_classify_latent(const Options& opt) {
    const csae::CsaeModel model = csae::load_checkpoint(opt.checkpoint);
    const csae::LabeledDataset train = load_dataset(opt.images, opt.labels);
    const csae::LabeledDataset test = load_dataset(opt.test_images, opt.test_labels);

    csae::PipelineOptions pipeline;
    pipeline.method = opt.method == "gnb"   ? csae::LatentMethod::gnb
                      : opt.method == "svm" ? csae::LatentMethod::svm
                                            : csae::LatentMethod::knn;
    pipeline.k = opt.k;
    pipeline.standardize_latent = opt.standardize_latent;
    pipeline.smo.seed = opt.seed;

    const csae::PipelineResult result = csae::pipeline_classify(model, train, test, pipeline);
    if (!result.svm_converged)
        std::fprintf(stderr, "warning: SMO hit its pass cap on at least one class pair; "
                             "using best-so-far model\n");
    print_metric("accuracy", result.metrics.accuracy);
    print_metric("weighted_f1", result.metrics.weighted_f1);
    return 0;
}

int run_viz_boundary(const Options& opt) {
    const csae::CsaeModel model = csae::load_checkpoint(opt.checkpoint);
    const csae::LabeledDataset test = load_dataset(opt.test_images, opt.test_labels);
    const csae::LatentDataset latents = csae::extract_latent(model, test.images, test.labels);
    csae::GridSpec grid;
    grid.resolution = opt.resolution > 0 ? opt.resolution : 400;
    csae::decision_boundary_image(model, latents.z, grid, opt.out);
    std::printf("decision boundary (%dx%d PPM) written to %s\n", grid.resolution,
                grid.resolution, opt.out.c_str());
    return 0;
}

int run_viz_decoder_grid(const Options& opt) {
    const csae::CsaeModel model = csae::load_checkpoint(opt.checkpoint);
    const csae::Tensor images = csae::normalize01(csae::load_idx_images(opt.test_images));
    const std::vector<int> dummy(static_cast<std::size_t>(images.dim(0)), 0);
    const csae::LatentDataset latents = csae::extract_latent(model, images, dummy);

    const int res = opt.resolution > 0 ? opt.resolution : 10;
    const int tile = opt.tile > 0 ? opt.tile : model.preset.input_side;
    const csae::GridSpec grid = csae::grid_from_latents(latents.z, 0.10, res);
    csae::decoder_grid_image(model, grid, tile, opt.out);
    std::printf("decoder grid (%dx%d tiles of %dpx, PGM) written to %s\n", res, res, tile,
                opt.out.c_str());
    return 0;
}

int run_gradcheck() {
    bool all_ok = true;
    for (const auto& c : csae::run_gradcheck_suite()) {
        std::printf("%-26s max_rel_err %.3e  tol %.0e  %s\n", c.name.c_str(), c.max_rel_err,
                    c.tolerance, c.passed() ? "PASS" : "FAIL");
        all_ok = all_ok && c.passed();
    }
    if (!all_ok) throw std::runtime_error("gradient checks failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"convolutional supervised autoencoder: training, latent-space classification "
                 "and visualization"};
    app.require_subcommand(1);

    Options opt;

    auto add_data_flags = [&](CLI::App* cmd, bool train_side, bool test_side) {
        if (train_side) {
            cmd->add_option("--images", opt.images, "training images (IDX, optionally .gz)")
                ->required();
            cmd->add_option("--labels", opt.labels, "training labels (IDX)")->required();
        }
        if (test_side) {
            cmd->add_option("--test-images", opt.test_images, "test images (IDX)")->required();
            cmd->add_option("--test-labels", opt.test_labels, "test labels (IDX)")->required();
        }
    };

    CLI::App* train = app.add_subcommand("train", "train a model with alternating updates");
    train->add_option("--preset", opt.preset, "architecture preset")
        ->check(CLI::IsMember({"small28", "large128"}));
    train->add_option("--lambda", opt.lambda, "latent dimension");
    train->add_option("--epochs", opt.epochs, "training epochs");
    train->add_option("--batch-size", opt.batch_size, "mini-batch size");
    train->add_option("--seed", opt.seed, "RNG seed");
    train->add_option("--update-mode", opt.update_mode,
                      "whether classification updates reach the encoder")
        ->check(CLI::IsMember({"joint", "head_only"}));
    train->add_option("--subset", opt.subset, "train on the first N shuffled samples");
    add_data_flags(train, true, false);
    train->add_option("--test-images", opt.test_images, "optional test images for a final report");
    train->add_option("--test-labels", opt.test_labels, "optional test labels");
    train->add_option("--checkpoint", opt.checkpoint, "output checkpoint path")->required();
    train->add_option("--out", opt.out, "per-epoch report CSV path");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a labeled set");
    eval->add_option("--checkpoint", opt.checkpoint, "model checkpoint")->required();
    add_data_flags(eval, false, true);

    CLI::App* extract = app.add_subcommand("extract-latent", "write latent codes as CSV");
    extract->add_option("--checkpoint", opt.checkpoint, "model checkpoint")->required();
    add_data_flags(extract, true, false);
    extract->add_option("--out", opt.out, "output CSV path")->required();

    CLI::App* classify =
        app.add_subcommand("classify-latent", "fit a classical classifier on latent codes");
    classify->add_option("--checkpoint", opt.checkpoint, "model checkpoint")->required();
    add_data_flags(classify, true, true);
    classify->add_option("--method", opt.method, "classifier")
        ->check(CLI::IsMember({"knn", "gnb", "svm"}));
    classify->add_option("--k", opt.k, "neighbor count for knn");
    classify->add_flag("--standardize-latent", opt.standardize_latent,
                       "standardize latent features with training statistics");
    classify->add_option("--seed", opt.seed, "RNG seed (SMO pair selection)");

    CLI::App* boundary =
        app.add_subcommand("viz-boundary", "decision-boundary raster over a 2-d latent space");
    boundary->add_option("--checkpoint", opt.checkpoint, "model checkpoint (lambda=2)")->required();
    add_data_flags(boundary, false, true);
    boundary->add_option("--resolution", opt.resolution, "pixels per axis (default 400)");
    boundary->add_option("--out", opt.out, "output PPM path")->required();

    CLI::App* grid = app.add_subcommand("viz-decoder-grid",
                                        "mosaic of images decoded from a latent grid");
    grid->add_option("--checkpoint", opt.checkpoint, "model checkpoint (lambda=2)")->required();
    grid->add_option("--test-images", opt.test_images, "images whose latents set the grid range")
        ->required();
    grid->add_option("--resolution", opt.resolution, "tiles per axis (default 10)");
    grid->add_option("--tile", opt.tile, "tile side in pixels (default: model input side)");
    grid->add_option("--out", opt.out, "output PGM path")->required();

    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference checks of every backward pass");
    (void)gradcheck;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return run_train(opt);
        if (eval->parsed()) return run_eval(opt);
        if (extract->parsed()) return run_extract_latent(opt);
        if (classify->parsed()) return run_classify_latent(opt);
        if (boundary->parsed()) return run_viz_boundary(opt);
        if (grid->parsed()) return run_viz_decoder_grid(opt);
        if (gradcheck->parsed()) return run_gradcheck();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
