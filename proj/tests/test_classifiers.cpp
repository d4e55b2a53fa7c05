#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "csae/classifiers.hpp"
#include "csae/rng.hpp"
#include "doctest.h"

using namespace csae;

namespace {

// independent O(n*m) oracle: full sort by (distance, index), majority vote,
// vote ties to the tied class with the nearest member
std::vector<int> knn_oracle(const LatentDataset& train, const Tensor& query, int k) {
    const int n = train.count(), d = train.dims(), m = query.dim(0);
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int q = 0; q < m; ++q) {
        std::vector<std::pair<double, int>> all;
        for (int i = 0; i < n; ++i) {
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = static_cast<double>(train.z.at2(i, j)) - query.at2(q, j);
                dist += diff * diff;
            }
            all.emplace_back(dist, i);
        }
        std::sort(all.begin(), all.end());
        std::map<int, int> votes;
        for (int i = 0; i < k; ++i) ++votes[train.y[static_cast<std::size_t>(all[static_cast<std::size_t>(i)].second)]];
        int best = -1;
        for (const auto& [cls, v] : votes)
            if (best < 0 || v > votes[best]) best = cls;
        for (int i = 0; i < k; ++i) {
            const int cls = train.y[static_cast<std::size_t>(all[static_cast<std::size_t>(i)].second)];
            if (votes[cls] == votes[best]) {
                out[static_cast<std::size_t>(q)] = cls;
                break;
            }
        }
    }
    return out;
}

LatentDataset random_latents(int n, int d, int classes, std::mt19937& rng) {
    LatentDataset ds;
    ds.z = Tensor({n, d});
    for (std::int64_t i = 0; i < ds.z.size(); ++i) ds.z[i] = 4.0f * uniform_float(rng) - 2.0f;
    ds.y.resize(static_cast<std::size_t>(n));
    for (auto& y : ds.y) y = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(classes)));
    return ds;
}

}  // namespace

TEST_CASE("knn hand cases") {
    LatentDataset train;
    train.z = Tensor({3, 2}, {0, 0, 0, 1, 5, 5});
    train.y = {0, 0, 1};

    CHECK(knn_predict(train, Tensor({1, 2}, {0.0f, 0.5f}), 3) == std::vector<int>{0});
    // query on a training point with k=1 returns its label
    CHECK(knn_predict(train, Tensor({1, 2}, {5.0f, 5.0f}), 1) == std::vector<int>{1});

    CHECK_THROWS_AS(knn_predict(train, Tensor({1, 2}), 4), std::invalid_argument);
    CHECK_THROWS_AS(knn_predict(LatentDataset{}, Tensor({1, 2}), 1), std::invalid_argument);
}

TEST_CASE("knn matches the brute-force oracle on 100 randomized instances") {
    std::mt19937 rng(2024);
    for (int inst = 0; inst < 100; ++inst) {
        const int n = 5 + static_cast<int>(uniform_index(rng, 196));
        const int d = 1 + static_cast<int>(uniform_index(rng, 16));
        const int classes = 2 + static_cast<int>(uniform_index(rng, 4));
        const LatentDataset train = random_latents(n, d, classes, rng);
        Tensor query({8, d});
        for (std::int64_t i = 0; i < query.size(); ++i)
            query[i] = 4.0f * uniform_float(rng) - 2.0f;
        const int k = std::min(n, 1 + 2 * static_cast<int>(uniform_index(rng, 3)));  // 1, 3 or 5

        CHECK(knn_predict(train, query, k) == knn_oracle(train, query, k));
    }
}

TEST_CASE("gnb hand cases") {
    LatentDataset train;
    train.z = Tensor({4, 1}, {0, 2, 10, 12});
    train.y = {0, 0, 1, 1};
    const GnbModel model = gnb_fit(train);
    CHECK(gnb_predict(model, Tensor({1, 1}, {1.0f})) == std::vector<int>{0});
    CHECK(gnb_predict(model, Tensor({1, 1}, {11.5f})) == std::vector<int>{1});

    // perfectly symmetric classes, query at the midpoint: lowest class wins
    CHECK(gnb_predict(model, Tensor({1, 1}, {6.0f})) == std::vector<int>{0});

    // constant feature stays finite thanks to smoothing
    LatentDataset flat;
    flat.z = Tensor({4, 2}, {1, 0, 1, 1, 1, 10, 1, 11});
    flat.y = {0, 0, 1, 1};
    const auto pred = gnb_predict(gnb_fit(flat), Tensor({1, 2}, {1.0f, 0.5f}));
    CHECK(pred == std::vector<int>{0});

    LatentDataset missing;
    missing.z = Tensor({2, 1}, {0, 1});
    missing.y = {0, 2};  // class 1 absent
    CHECK_THROWS_AS(gnb_fit(missing), std::invalid_argument);
}

TEST_CASE("gnb matches direct posterior evaluation") {
    std::mt19937 rng(77);
    for (int inst = 0; inst < 50; ++inst) {
        const int n = 10 + static_cast<int>(uniform_index(rng, 60));
        const int d = 1 + static_cast<int>(uniform_index(rng, 6));
        const int classes = 2 + static_cast<int>(uniform_index(rng, 3));
        LatentDataset train = random_latents(n, d, classes, rng);
        for (int c = 0; c < classes; ++c)  // ensure every class appears
            train.y[static_cast<std::size_t>(c)] = c;

        const GnbModel model = gnb_fit(train);
        Tensor query({6, d});
        for (std::int64_t i = 0; i < query.size(); ++i)
            query[i] = 4.0f * uniform_float(rng) - 2.0f;
        const std::vector<int> got = gnb_predict(model, query);

        // oracle: log prior + sum of Gaussian log densities from the fitted
        // parameters, highest posterior with ties to the lower class
        for (int q = 0; q < 6; ++q) {
            int best = 0;
            double best_score = -1e300;
            for (int c = 0; c < classes; ++c) {
                double score = model.log_prior[static_cast<std::size_t>(c)];
                for (int j = 0; j < d; ++j) {
                    const double mu = model.mean[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                    const double var = model.var[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                    const double x = query.at2(q, j);
                    score += -0.5 * std::log(2.0 * 3.14159265358979323846 * var) -
                             (x - mu) * (x - mu) / (2.0 * var);
                }
                if (score > best_score) {
                    best_score = score;
                    best = c;
                }
            }
            CHECK(got[static_cast<std::size_t>(q)] == best);
        }
    }
}

TEST_CASE("svm solves xor and satisfies kkt") {
    LatentDataset xor_set;
    xor_set.z = Tensor({4, 2}, {0, 0, 1, 1, 0, 1, 1, 0});
    xor_set.y = {0, 0, 1, 1};

    const SvmModel model = svm_fit(xor_set, {});
    CHECK(model.machines.size() == 1);
    CHECK(model.machines[0].converged);
    CHECK(svm_predict(model, xor_set.z) == xor_set.y);

    // KKT conditions on the raw dual solution
    std::vector<int> y_pm = {-1, -1, 1, 1};
    std::mt19937 rng(0);
    const double gamma = svm_scale_gamma(xor_set.z);
    const SmoResult fit = smo_solve(xor_set.z, y_pm, gamma, {}, rng);
    CHECK(fit.converged);
    CHECK(svm_kkt_violation(xor_set.z, y_pm, fit.alpha, fit.b, gamma, 1.0f) <= 1e-3);
    for (double a : fit.alpha) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
}

TEST_CASE("svm separates distant clusters with opposite decision signs") {
    std::mt19937 rng(5);
    LatentDataset ds;
    ds.z = Tensor({20, 2});
    ds.y.resize(20);
    for (int i = 0; i < 10; ++i) {
        ds.z.at2(i, 0) = -5.0f + uniform_float(rng);
        ds.z.at2(i, 1) = uniform_float(rng);
        ds.y[static_cast<std::size_t>(i)] = 0;
        ds.z.at2(i + 10, 0) = 5.0f + uniform_float(rng);
        ds.z.at2(i + 10, 1) = uniform_float(rng);
        ds.y[static_cast<std::size_t>(i + 10)] = 1;
    }
    std::vector<int> y_pm(20);
    for (int i = 0; i < 20; ++i) y_pm[static_cast<std::size_t>(i)] = i < 10 ? -1 : 1;
    const double gamma = svm_scale_gamma(ds.z);
    std::mt19937 solver_rng(1);
    const SmoResult fit = smo_solve(ds.z, y_pm, gamma, {}, solver_rng);

    const float neg_center[2] = {-4.5f, 0.5f};
    const float pos_center[2] = {4.5f, 0.5f};
    CHECK(svm_decision_value(ds.z, y_pm, fit.alpha, fit.b, gamma, neg_center, 2) < 0.0);
    CHECK(svm_decision_value(ds.z, y_pm, fit.alpha, fit.b, gamma, pos_center, 2) > 0.0);
}

TEST_CASE("one-vs-one builds k(k-1)/2 machines and is seed-deterministic") {
    std::mt19937 rng(9);
    LatentDataset blobs;
    blobs.z = Tensor({30, 2});
    blobs.y.resize(30);
    const float centers[3][2] = {{0, 0}, {6, 0}, {0, 6}};
    for (int i = 0; i < 30; ++i) {
        const int c = i % 3;
        blobs.z.at2(i, 0) = centers[c][0] + uniform_float(rng);
        blobs.z.at2(i, 1) = centers[c][1] + uniform_float(rng);
        blobs.y[static_cast<std::size_t>(i)] = c;
    }

    SmoOptions opts;
    opts.seed = 42;
    const SvmModel a = svm_fit(blobs, opts);
    const SvmModel b = svm_fit(blobs, opts);
    CHECK(a.machines.size() == 3);
    CHECK(svm_predict(a, blobs.z) == svm_predict(b, blobs.z));
    CHECK(svm_predict(a, blobs.z) == blobs.y);
}

TEST_CASE("binary smo is exactly equivariant to a global label flip") {
    std::mt19937 rng(31);
    const LatentDataset ds = random_latents(24, 3, 2, rng);
    std::vector<int> y_pm(24), y_flip(24);
    for (int i = 0; i < 24; ++i) {
        y_pm[static_cast<std::size_t>(i)] = ds.y[static_cast<std::size_t>(i)] == 1 ? 1 : -1;
        y_flip[static_cast<std::size_t>(i)] = -y_pm[static_cast<std::size_t>(i)];
    }
    const double gamma = svm_scale_gamma(ds.z);
    std::mt19937 r1(7), r2(7);
    const SmoResult a = smo_solve(ds.z, y_pm, gamma, {}, r1);
    const SmoResult b = smo_solve(ds.z, y_flip, gamma, {}, r2);

    CHECK(a.alpha == b.alpha);
    CHECK(a.b == -b.b);
}

TEST_CASE("standardize statistics and train-only fitting") {
    std::mt19937 rng(15);
    Tensor train({50, 4});
    for (std::int64_t i = 0; i < train.size(); ++i) train[i] = 3.0f * uniform_float(rng) + 1.0f;
    for (int i = 0; i < 50; ++i) train.at2(i, 2) = 7.0f;  // constant feature

    Tensor apply({10, 4});
    for (std::int64_t i = 0; i < apply.size(); ++i) apply[i] = uniform_float(rng);

    auto [train_std, apply_std] = standardize(train, apply);
    for (int j = 0; j < 4; ++j) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < 50; ++i) mean += train_std.at2(i, j);
        mean /= 50;
        for (int i = 0; i < 50; ++i) {
            const double diff = train_std.at2(i, j) - mean;
            var += diff * diff;
        }
        var /= 50;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-6));
        if (j == 2)
            CHECK(var == doctest::Approx(0.0));  // constant column collapses to zeros
        else
            CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-5));
    }

    // shifting apply data shifts outputs by delta / sigma_train
    double mu0 = 0.0, sd0 = 0.0;
    for (int i = 0; i < 50; ++i) mu0 += train.at2(i, 0);
    mu0 /= 50;
    for (int i = 0; i < 50; ++i) {
        const double diff = train.at2(i, 0) - mu0;
        sd0 += diff * diff;
    }
    sd0 = std::sqrt(sd0 / 50);
    Tensor shifted = apply;
    for (int i = 0; i < 10; ++i) shifted.at2(i, 0) += 2.0f;
    auto [unused, shifted_std] = standardize(train, shifted);
    (void)unused;
    for (int i = 0; i < 10; ++i)
        CHECK(shifted_std.at2(i, 0) - apply_std.at2(i, 0) ==
              doctest::Approx(2.0 / sd0).epsilon(1e-4));

    // re-standardizing standardized data is the identity
    auto [again, unused2] = standardize(train_std, apply_std);
    (void)unused2;
    for (std::int64_t i = 0; i < again.size(); ++i)
        CHECK(again[i] == doctest::Approx(train_std[i]).epsilon(1e-6));
}

TEST_CASE("extract_latent batching does not change results") {
    const CsaeModel model = build_csae(make_preset("small28", 2, 4), 66);
    std::mt19937 rng(8);
    Tensor images({10, 28, 28, 1});
    for (std::int64_t i = 0; i < images.size(); ++i) images[i] = uniform_float(rng);
    const std::vector<int> labels(10, 1);

    const LatentDataset whole = extract_latent(model, images, labels, 100);
    const LatentDataset chunked = extract_latent(model, images, labels, 3);
    CHECK(whole.z.values() == chunked.z.values());
    CHECK(whole.z.shape() == std::vector<int>{10, 2});
}

TEST_CASE("latent csv round-trip") {
    std::mt19937 rng(19);
    const LatentDataset ds = random_latents(12, 3, 4, rng);
    write_latent_csv(ds, "latents.csv");
    const LatentDataset back = read_latent_csv("latents.csv");
    CHECK(back.z.shape() == ds.z.shape());
    CHECK(back.y == ds.y);
    for (std::int64_t i = 0; i < ds.z.size(); ++i) CHECK(back.z[i] == ds.z[i]);
    std::remove("latents.csv");
}
