#include "csae/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "csae/rng.hpp"

namespace csae {

LatentDataset extract_latent(const CsaeModel& model, const Tensor& images,
                             const std::vector<int>& labels, int batch_size) {
    const int n = images.dim(0);
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("extract_latent: image/label count mismatch");
    const std::int64_t px = images.size() / n;
    const int d = model.preset.latent_dim;

    LatentDataset out;
    out.z = Tensor({n, d});
    out.y = labels;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        Tensor part({end - start, images.dim(1), images.dim(2), images.dim(3)});
        std::copy(images.data() + start * px, images.data() + end * px, part.data());
        const Tensor z = encode(model, part);
        std::copy(z.data(), z.data() + z.size(), out.z.data() + static_cast<std::int64_t>(start) * d);
    }
    return out;
}

Tensor flatten_images(const Tensor& images) {
    if (images.rank() != 4) throw std::invalid_argument("flatten_images: expected rank-4 input");
    return images.reshaped({images.dim(0), static_cast<int>(images.size() / images.dim(0))});
}

// ----------------------------------------------------------------- k-NN ----

namespace {

double sq_distance(const float* a, const float* b, int d) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

std::vector<int> knn_predict(const LatentDataset& train, const Tensor& query, int k) {
    if (train.z.rank() != 2 || train.y.empty())
        throw std::invalid_argument("knn_predict: empty training set");
    const int n = train.count(), d = train.dims();
    if (static_cast<int>(train.y.size()) != n)
        throw std::invalid_argument("knn_predict: label count mismatch");
    if (k < 1 || k > n)
        throw std::invalid_argument("knn_predict: k=" + std::to_string(k) +
                                    " out of range for n=" + std::to_string(n));
    if (query.rank() != 2 || query.dim(1) != d)
        throw std::invalid_argument("knn_predict: query width mismatch");

    const int m = query.dim(0);
    std::vector<int> out(static_cast<std::size_t>(m));
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int q = 0; q < m; ++q) {
        const float* qrow = query.data() + static_cast<std::size_t>(q) * d;
        for (int i = 0; i < n; ++i)
            dist[static_cast<std::size_t>(i)] = {
                sq_distance(train.z.data() + static_cast<std::size_t>(i) * d, qrow, d), i};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

        std::map<int, int> votes;
        for (int i = 0; i < k; ++i) ++votes[train.y[static_cast<std::size_t>(dist[i].second)]];
        int best_votes = 0;
        for (const auto& [cls, v] : votes) best_votes = std::max(best_votes, v);
        // vote tie: the first neighbor of a fully-voted class settles it
        for (int i = 0; i < k; ++i) {
            const int cls = train.y[static_cast<std::size_t>(dist[i].second)];
            if (votes[cls] == best_votes) {
                out[static_cast<std::size_t>(q)] = cls;
                break;
            }
        }
    }
    return out;
}

// ------------------------------------------------------------------ GNB ----

GnbModel gnb_fit(const LatentDataset& train) {
    if (train.z.rank() != 2 || train.y.size() != static_cast<std::size_t>(train.z.dim(0)))
        throw std::invalid_argument("gnb_fit: empty or inconsistent training set");
    const int n = train.count(), d = train.dims();
    int k = 0;
    for (int label : train.y) {
        if (label < 0) throw std::invalid_argument("gnb_fit: negative label");
        k = std::max(k, label + 1);
    }

    GnbModel model;
    model.num_classes = k;
    model.log_prior.assign(static_cast<std::size_t>(k), 0.0);
    model.mean.assign(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
    model.var.assign(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));

    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
        const auto cls = static_cast<std::size_t>(train.y[static_cast<std::size_t>(i)]);
        ++count[cls];
        const float* row = train.z.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) model.mean[cls][static_cast<std::size_t>(j)] += row[j];
    }
    for (int c = 0; c < k; ++c) {
        if (count[static_cast<std::size_t>(c)] == 0)
            throw std::invalid_argument("gnb_fit: class " + std::to_string(c) +
                                        " absent from training set");
        for (auto& mu : model.mean[static_cast<std::size_t>(c)])
            mu /= count[static_cast<std::size_t>(c)];
        model.log_prior[static_cast<std::size_t>(c)] =
            std::log(static_cast<double>(count[static_cast<std::size_t>(c)]) / n);
    }
    for (int i = 0; i < n; ++i) {
        const auto cls = static_cast<std::size_t>(train.y[static_cast<std::size_t>(i)]);
        const float* row = train.z.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            const double diff = row[j] - model.mean[cls][static_cast<std::size_t>(j)];
            model.var[cls][static_cast<std::size_t>(j)] += diff * diff;
        }
    }

    // smoothing: 1e-9 x the largest per-feature variance of the pooled data
    std::vector<double> pooled_mean(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) {
        const float* row = train.z.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) pooled_mean[static_cast<std::size_t>(j)] += row[j];
    }
    for (auto& v : pooled_mean) v /= n;
    double max_var = 0.0;
    for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double diff =
                train.z.data()[static_cast<std::size_t>(i) * d + j] - pooled_mean[static_cast<std::size_t>(j)];
            acc += diff * diff;
        }
        max_var = std::max(max_var, acc / n);
    }
    const double eps = std::max(1e-9 * max_var, 1e-300);

    for (int c = 0; c < k; ++c)
        for (int j = 0; j < d; ++j) {
            auto& v = model.var[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
            v = v / count[static_cast<std::size_t>(c)] + eps;
        }
    return model;
}

std::vector<int> gnb_predict(const GnbModel& model, const Tensor& query) {
    const int m = query.dim(0), d = query.dim(1);
    std::vector<int> out(static_cast<std::size_t>(m));
    constexpr double kLog2Pi = 1.8378770664093453;
    for (int q = 0; q < m; ++q) {
        const float* row = query.data() + static_cast<std::size_t>(q) * d;
        int best = 0;
        double best_ll = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < model.num_classes; ++c) {
            double ll = model.log_prior[static_cast<std::size_t>(c)];
            for (int j = 0; j < d; ++j) {
                const double var = model.var[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                const double diff = row[j] - model.mean[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                ll -= 0.5 * (kLog2Pi + std::log(var) + diff * diff / var);
            }
            if (ll > best_ll) {  // ties keep the lower class index
                best_ll = ll;
                best = c;
            }
        }
        out[static_cast<std::size_t>(q)] = best;
    }
    return out;
}

// ------------------------------------------------------------------ SVM ----

namespace {

double rbf(const float* a, const float* b, int d, double gamma) {
    return std::exp(-gamma * sq_distance(a, b, d));
}

}  // namespace

double svm_scale_gamma(const Tensor& x) {
    const std::int64_t n = x.size();
    double mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double diff = x[i] - mean;
        var += diff * diff;
    }
    var /= static_cast<double>(n);
    const int d = x.dim(x.rank() - 1);
    if (var <= 1e-12) return 1.0 / d;
    return 1.0 / (d * var);
}

SmoResult smo_solve(const Tensor& x, const std::vector<int>& y_pm, double gamma,
                    const SmoOptions& opts, std::mt19937& rng) {
    const int n = x.dim(0), d = x.dim(1);
    if (n < 2) throw std::invalid_argument("smo_solve: need at least two points");

    // dense kernel matrix; training sets here are latent-sized
    std::vector<double> kernel(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = rbf(x.data() + static_cast<std::size_t>(i) * d,
                                 x.data() + static_cast<std::size_t>(j) * d, d, gamma);
            kernel[static_cast<std::size_t>(i) * n + j] = v;
            kernel[static_cast<std::size_t>(j) * n + i] = v;
        }

    SmoResult res;
    res.alpha.assign(static_cast<std::size_t>(n), 0.0);
    const double c = opts.c;

    auto f_of = [&](int i) {
        double acc = res.b;
        for (int j = 0; j < n; ++j)
            if (res.alpha[static_cast<std::size_t>(j)] > 0.0)
                acc += res.alpha[static_cast<std::size_t>(j)] * y_pm[static_cast<std::size_t>(j)] *
                       kernel[static_cast<std::size_t>(j) * n + i];
        return acc;
    };

    const int pass_cap = opts.pass_cap_factor * n;
    int clean_passes = 0;
    while (res.passes < pass_cap && clean_passes < opts.max_clean_passes) {
        int changed = 0;
        for (int i = 0; i < n; ++i) {
            const double ei = f_of(i) - y_pm[static_cast<std::size_t>(i)];
            const double ri = ei * y_pm[static_cast<std::size_t>(i)];
            const double ai = res.alpha[static_cast<std::size_t>(i)];
            if (!((ri < -opts.tol && ai < c) || (ri > opts.tol && ai > 0.0))) continue;

            int j = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(n - 1)));
            if (j >= i) ++j;
            const double ej = f_of(j) - y_pm[static_cast<std::size_t>(j)];
            const double aj = res.alpha[static_cast<std::size_t>(j)];

            double lo, hi;
            if (y_pm[static_cast<std::size_t>(i)] != y_pm[static_cast<std::size_t>(j)]) {
                lo = std::max(0.0, aj - ai);
                hi = std::min(c, c + aj - ai);
            } else {
                lo = std::max(0.0, ai + aj - c);
                hi = std::min(c, ai + aj);
            }
            if (lo >= hi) continue;

            const double eta = 2.0 * kernel[static_cast<std::size_t>(i) * n + j] -
                               kernel[static_cast<std::size_t>(i) * n + i] -
                               kernel[static_cast<std::size_t>(j) * n + j];
            if (eta >= 0.0) continue;

            double aj_new = aj - y_pm[static_cast<std::size_t>(j)] * (ei - ej) / eta;
            aj_new = std::min(hi, std::max(lo, aj_new));
            if (std::abs(aj_new - aj) < 1e-5) continue;
            const double ai_new =
                ai + y_pm[static_cast<std::size_t>(i)] * y_pm[static_cast<std::size_t>(j)] * (aj - aj_new);

            const double b1 = res.b - ei -
                              y_pm[static_cast<std::size_t>(i)] * (ai_new - ai) *
                                  kernel[static_cast<std::size_t>(i) * n + i] -
                              y_pm[static_cast<std::size_t>(j)] * (aj_new - aj) *
                                  kernel[static_cast<std::size_t>(i) * n + j];
            const double b2 = res.b - ej -
                              y_pm[static_cast<std::size_t>(i)] * (ai_new - ai) *
                                  kernel[static_cast<std::size_t>(i) * n + j] -
                              y_pm[static_cast<std::size_t>(j)] * (aj_new - aj) *
                                  kernel[static_cast<std::size_t>(j) * n + j];
            res.alpha[static_cast<std::size_t>(i)] = ai_new;
            res.alpha[static_cast<std::size_t>(j)] = aj_new;
            if (ai_new > 0.0 && ai_new < c)
                res.b = b1;
            else if (aj_new > 0.0 && aj_new < c)
                res.b = b2;
            else
                res.b = (b1 + b2) / 2.0;
            ++changed;
        }
        ++res.passes;
        clean_passes = changed == 0 ? clean_passes + 1 : 0;
    }
    res.converged = clean_passes >= opts.max_clean_passes;
    return res;
}

double svm_decision_value(const Tensor& x, const std::vector<int>& y_pm,
                          const std::vector<double>& alpha, double b, double gamma,
                          const float* q, int d) {
    double acc = b;
    for (int i = 0; i < x.dim(0); ++i)
        if (alpha[static_cast<std::size_t>(i)] > 0.0)
            acc += alpha[static_cast<std::size_t>(i)] * y_pm[static_cast<std::size_t>(i)] *
                   rbf(x.data() + static_cast<std::size_t>(i) * d, q, d, gamma);
    return acc;
}

double svm_kkt_violation(const Tensor& x, const std::vector<int>& y_pm,
                         const std::vector<double>& alpha, double b, double gamma, float c) {
    const int n = x.dim(0), d = x.dim(1);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double margin = y_pm[static_cast<std::size_t>(i)] *
                              svm_decision_value(x, y_pm, alpha, b, gamma,
                                                 x.data() + static_cast<std::size_t>(i) * d, d);
        const double a = alpha[static_cast<std::size_t>(i)];
        if (a <= 0.0)
            worst = std::max(worst, 1.0 - margin);        // must have margin >= 1
        else if (a >= static_cast<double>(c))
            worst = std::max(worst, margin - 1.0);        // must have margin <= 1
        else
            worst = std::max(worst, std::abs(margin - 1.0));
    }
    return worst;
}

SvmModel svm_fit(const LatentDataset& train, const SmoOptions& opts) {
    if (train.z.rank() != 2 || train.y.size() != static_cast<std::size_t>(train.z.dim(0)))
        throw std::invalid_argument("svm_fit: empty or inconsistent training set");
    const int n = train.count(), d = train.dims();
    int k = 0;
    for (int label : train.y) k = std::max(k, label + 1);
    if (k < 2) throw std::invalid_argument("svm_fit: need at least two classes");

    SvmModel model;
    model.num_classes = k;
    model.c = opts.c;
    model.gamma = svm_scale_gamma(train.z);

    std::mt19937 rng(opts.seed);
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            std::vector<int> idx;
            for (int i = 0; i < n; ++i)
                if (train.y[static_cast<std::size_t>(i)] == a ||
                    train.y[static_cast<std::size_t>(i)] == b)
                    idx.push_back(i);
            if (idx.empty())
                throw std::invalid_argument("svm_fit: classes " + std::to_string(a) + "/" +
                                            std::to_string(b) + " absent from training set");
            Tensor sub({static_cast<int>(idx.size()), d});
            std::vector<int> y_pm(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                std::copy(train.z.data() + static_cast<std::size_t>(idx[i]) * d,
                          train.z.data() + static_cast<std::size_t>(idx[i] + 1) * d,
                          sub.data() + static_cast<std::int64_t>(i) * d);
                y_pm[i] = train.y[static_cast<std::size_t>(idx[i])] == b ? 1 : -1;
            }

            const SmoResult fit = smo_solve(sub, y_pm, model.gamma, opts, rng);

            BinarySvm machine;
            machine.class_lo = a;
            machine.class_hi = b;
            machine.intercept = fit.b;
            machine.converged = fit.converged;
            std::vector<int> sv;
            for (std::size_t i = 0; i < fit.alpha.size(); ++i)
                if (fit.alpha[i] > 1e-12) sv.push_back(static_cast<int>(i));
            machine.support = Tensor({std::max(1, static_cast<int>(sv.size())), d});
            machine.coef.assign(sv.size(), 0.0f);
            for (std::size_t i = 0; i < sv.size(); ++i) {
                std::copy(sub.data() + static_cast<std::size_t>(sv[i]) * d,
                          sub.data() + static_cast<std::size_t>(sv[i] + 1) * d,
                          machine.support.data() + static_cast<std::int64_t>(i) * d);
                machine.coef[i] = static_cast<float>(fit.alpha[static_cast<std::size_t>(sv[i])] *
                                                     y_pm[static_cast<std::size_t>(sv[i])]);
            }
            model.machines.push_back(std::move(machine));
        }
    }
    return model;
}

std::vector<int> svm_predict(const SvmModel& model, const Tensor& query) {
    const int m = query.dim(0), d = query.dim(1);
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int q = 0; q < m; ++q) {
        const float* row = query.data() + static_cast<std::size_t>(q) * d;
        std::vector<int> votes(static_cast<std::size_t>(model.num_classes), 0);
        for (const auto& machine : model.machines) {
            double f = machine.intercept;
            for (std::size_t i = 0; i < machine.coef.size(); ++i)
                f += machine.coef[i] *
                     rbf(machine.support.data() + static_cast<std::int64_t>(i) * d, row, d,
                         model.gamma);
            ++votes[static_cast<std::size_t>(f > 0.0 ? machine.class_hi : machine.class_lo)];
        }
        int best = 0;
        for (int c = 1; c < model.num_classes; ++c)
            if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
        out[static_cast<std::size_t>(q)] = best;
    }
    return out;
}

// -------------------------------------------------------------- pipeline ---

std::pair<Tensor, Tensor> standardize(const Tensor& train_x, const Tensor& apply_x) {
    if (train_x.rank() != 2 || apply_x.rank() != 2 || train_x.dim(1) != apply_x.dim(1))
        throw std::invalid_argument("standardize: expected rank-2 inputs of equal width");
    const int n = train_x.dim(0), d = train_x.dim(1);
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0), stddev(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) {
        const float* row = train_x.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += row[j];
    }
    for (auto& v : mean) v /= n;
    for (int i = 0; i < n; ++i) {
        const float* row = train_x.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            const double diff = row[j] - mean[static_cast<std::size_t>(j)];
            stddev[static_cast<std::size_t>(j)] += diff * diff;
        }
    }
    for (auto& v : stddev) v = std::max(std::sqrt(v / n), 1e-8);

    auto transform = [&](const Tensor& src) {
        Tensor out = src;
        const int rows = src.dim(0);
        for (int i = 0; i < rows; ++i) {
            float* row = out.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j)
                row[j] = static_cast<float>((row[j] - mean[static_cast<std::size_t>(j)]) /
                                            stddev[static_cast<std::size_t>(j)]);
        }
        return out;
    };
    return {transform(train_x), transform(apply_x)};
}

PipelineResult pipeline_classify(const CsaeModel& model, const LabeledDataset& train,
                                 const LabeledDataset& test, const PipelineOptions& opts) {
    LatentDataset z_train = extract_latent(model, train.images, train.labels);
    LatentDataset z_test = extract_latent(model, test.images, test.labels);
    if (opts.standardize_latent) {
        auto [tr, te] = standardize(z_train.z, z_test.z);
        z_train.z = std::move(tr);
        z_test.z = std::move(te);
    }

    PipelineResult result;
    switch (opts.method) {
        case LatentMethod::knn:
            result.predictions = knn_predict(z_train, z_test.z, opts.k);
            break;
        case LatentMethod::gnb:
            result.predictions = gnb_predict(gnb_fit(z_train), z_test.z);
            break;
        case LatentMethod::svm: {
            const SvmModel svm = svm_fit(z_train, opts.smo);
            for (const auto& machine : svm.machines)
                result.svm_converged = result.svm_converged && machine.converged;
            result.predictions = svm_predict(svm, z_test.z);
            break;
        }
    }
    result.metrics = metrics_report(test.labels, result.predictions);
    return result;
}

void write_latent_csv(const LatentDataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const int n = ds.count(), d = ds.dims();
    for (int j = 0; j < d; ++j) os << "z" << j << ",";
    os << "label\n";
    char buf[48];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g,", static_cast<double>(ds.z.at2(i, j)));
            os << buf;
        }
        os << ds.y[static_cast<std::size_t>(i)] << "\n";
    }
}

LatentDataset read_latent_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("empty latent csv: " + path);
    int d = 0;
    for (char ch : header)
        if (ch == ',') ++d;  // d latent columns plus the label column

    std::vector<float> values;
    std::vector<int> labels;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (int j = 0; j < d; ++j) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("short row in " + path);
            values.push_back(std::stof(cell));
        }
        if (!std::getline(ss, cell)) throw std::runtime_error("missing label in " + path);
        labels.push_back(std::stoi(cell));
    }
    const int n = static_cast<int>(labels.size());
    if (n == 0) throw std::runtime_error("no rows in " + path);
    return LatentDataset{Tensor({n, d}, std::move(values)), std::move(labels)};
}

}  // namespace csae
