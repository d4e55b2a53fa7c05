#include "csae/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace csae {

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw std::invalid_argument("accuracy: label vectors must be nonempty and equal length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] == y_pred[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(y_true.size());
}

MetricsReport metrics_report(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw std::invalid_argument("metrics: label vectors must be nonempty and equal length");

    struct Counts {
        int tp = 0, fp = 0, fn = 0;
    };
    std::map<int, Counts> counts;  // keyed by class id, labels need not be dense
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) {
            counts[y_true[i]].tp++;
        } else {
            counts[y_true[i]].fn++;
            counts[y_pred[i]].fp++;
        }
    }

    MetricsReport report;
    report.accuracy = accuracy(y_true, y_pred);
    const double n = static_cast<double>(y_true.size());
    for (const auto& [cls, c] : counts) {
        ClassMetrics m;
        m.cls = cls;
        m.support = c.tp + c.fn;
        m.precision = (c.tp + c.fp) ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
        m.recall = m.support ? static_cast<double>(c.tp) / m.support : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        // classes absent from y_true carry zero support and zero weight
        report.weighted_f1 += (m.support / n) * m.f1;
        report.per_class.push_back(m);
    }
    return report;
}

double weighted_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    return metrics_report(y_true, y_pred).weighted_f1;
}

}  // namespace csae
