#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fer/errors.hpp"

namespace fer {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<int64_t> counts;  // num_classes * num_classes

    explicit ConfusionMatrix(int n = 7) : num_classes(n), counts(static_cast<size_t>(n) * n, 0) {}

    int64_t& at(int truth, int pred) { return counts[static_cast<size_t>(truth) * num_classes + pred]; }
    int64_t at(int truth, int pred) const { return counts[static_cast<size_t>(truth) * num_classes + pred]; }

    int64_t total() const {
        int64_t s = 0;
        for (int64_t c : counts) s += c;
        return s;
    }
    int64_t support(int truth) const {
        int64_t s = 0;
        for (int p = 0; p < num_classes; ++p) s += at(truth, p);
        return s;
    }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& labels,
                                        int num_classes = 7) {
    if (predictions.size() != labels.size())
        throw RangeError("confusion_matrix: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    ConfusionMatrix cm(num_classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes)
            throw RangeError("confusion_matrix: class out of range at sample " + std::to_string(i));
        cm.at(labels[i], predictions[i]) += 1;
    }
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t support = 0;
    bool degenerate = false;  // a zero denominator was reported as 0
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    int64_t total_support = 0;
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic mean;
// zero-denominator classes report 0 and are flagged. Macro averages are
// unweighted means, weighted averages support-weighted means.
inline MetricsReport metrics_report(const ConfusionMatrix& cm) {
    MetricsReport r;
    const int n = cm.num_classes;
    r.per_class.resize(static_cast<size_t>(n));
    int64_t trace = 0;
    for (int c = 0; c < n; ++c) {
        ClassMetrics& m = r.per_class[static_cast<size_t>(c)];
        const int64_t tp = cm.at(c, c);
        int64_t col = 0, row = 0;
        for (int k = 0; k < n; ++k) {
            col += cm.at(k, c);
            row += cm.at(c, k);
        }
        m.support = row;
        if (col > 0) m.precision = static_cast<double>(tp) / static_cast<double>(col);
        if (row > 0) m.recall = static_cast<double>(tp) / static_cast<double>(row);
        if (col == 0 || row == 0) m.degenerate = true;
        if (m.precision + m.recall > 0.0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        trace += tp;
        r.total_support += row;
    }
    if (r.total_support > 0) r.accuracy = static_cast<double>(trace) / static_cast<double>(r.total_support);
    for (int c = 0; c < n; ++c) {
        const ClassMetrics& m = r.per_class[static_cast<size_t>(c)];
        r.macro_precision += m.precision / n;
        r.macro_recall += m.recall / n;
        r.macro_f1 += m.f1 / n;
        if (r.total_support > 0) {
            const double w = static_cast<double>(m.support) / static_cast<double>(r.total_support);
            r.weighted_precision += w * m.precision;
            r.weighted_recall += w * m.recall;
            r.weighted_f1 += w * m.f1;
        }
    }
    return r;
}

// Per-class table in the usual evaluation-report column order, then accuracy
// and the macro / weighted average rows.
inline std::string format_metrics_report(const MetricsReport& r, const std::vector<std::string>& class_names) {
    char buf[160];
    std::string out = "              precision    recall  f1-score   support\n\n";
    for (size_t c = 0; c < r.per_class.size(); ++c) {
        const ClassMetrics& m = r.per_class[c];
        std::snprintf(buf, sizeof buf, "%12s       %.2f      %.2f      %.2f  %8lld\n",
                      class_names[c].c_str(), m.precision, m.recall, m.f1,
                      static_cast<long long>(m.support));
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "\n    accuracy                           %.2f  %8lld\n", r.accuracy,
                  static_cast<long long>(r.total_support));
    out += buf;
    std::snprintf(buf, sizeof buf, "   macro avg       %.2f      %.2f      %.2f  %8lld\n", r.macro_precision,
                  r.macro_recall, r.macro_f1, static_cast<long long>(r.total_support));
    out += buf;
    std::snprintf(buf, sizeof buf, "weighted avg       %.2f      %.2f      %.2f  %8lld\n", r.weighted_precision,
                  r.weighted_recall, r.weighted_f1, static_cast<long long>(r.total_support));
    out += buf;
    return out;
}

// 7x7 counts with a class-name header row and column.
inline void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                                const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << "true\\pred";
    for (int c = 0; c < cm.num_classes; ++c) f << ',' << class_names[static_cast<size_t>(c)];
    f << '\n';
    for (int t = 0; t < cm.num_classes; ++t) {
        f << class_names[static_cast<size_t>(t)];
        for (int p = 0; p < cm.num_classes; ++p) f << ',' << cm.at(t, p);
        f << '\n';
    }
}

}  // namespace fer
