// Classification metrics: accuracy and support-weighted F1.
#pragma once

#include <vector>

namespace csae {

struct ClassMetrics {
    int cls = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

struct MetricsReport {
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
};

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// per-class F1 averaged with weights proportional to true-label support;
// zero-denominator precision/recall/F1 conventions all resolve to 0
double weighted_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred);

MetricsReport metrics_report(const std::vector<int>& y_true, const std::vector<int>& y_pred);

}  // namespace csae
