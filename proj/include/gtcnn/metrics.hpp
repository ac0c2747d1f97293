#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gtcnn/array2d.hpp"
#include "gtcnn/error.hpp"

namespace gtcnn {

// ---------------------------------------------------------------------------
// Confusion matrix and derived scores
// ---------------------------------------------------------------------------

/// counts[i][j] = samples with true class i predicted as class j.
struct ConfusionMatrix {
    std::vector<std::vector<std::int64_t>> counts;

    std::size_t classes() const { return counts.size(); }

    std::int64_t total() const {
        std::int64_t n = 0;
        for (const auto& row : counts)
            for (auto v : row) n += v;
        return n;
    }

    std::int64_t trace() const {
        std::int64_t n = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
        return n;
    }

    std::int64_t row_sum(std::size_t i) const {
        std::int64_t n = 0;
        for (auto v : counts[i]) n += v;
        return n;
    }

    std::int64_t col_sum(std::size_t j) const {
        std::int64_t n = 0;
        for (const auto& row : counts) n += row[j];
        return n;
    }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred, std::size_t classes) {
    if (y_true.size() != y_pred.size())
        throw ConfigError("confusion_matrix: label vectors differ in length");
    ConfusionMatrix cm;
    cm.counts.assign(classes, std::vector<std::int64_t>(classes, 0));
    for (std::size_t k = 0; k < y_true.size(); ++k) {
        const int t = y_true[k], p = y_pred[k];
        if (t < 0 || p < 0 || t >= static_cast<int>(classes) || p >= static_cast<int>(classes))
            throw ConfigError("confusion_matrix: label out of range at index " + std::to_string(k));
        ++cm.counts[t][p];
    }
    return cm;
}

/// Row-stochastic rates; all-zero rows stay zero.
inline Array2D row_normalize(const ConfusionMatrix& cm) {
    const std::size_t c = cm.classes();
    Array2D out(c, c);
    for (std::size_t i = 0; i < c; ++i) {
        const double total = static_cast<double>(cm.row_sum(i));
        if (total == 0.0) continue;
        for (std::size_t j = 0; j < c; ++j)
            out.at(i, j) = static_cast<double>(cm.counts[i][j]) / total;
    }
    return out;
}

inline double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    return total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;
}

struct PrfScores {
    std::vector<double> precision, recall, f1;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

/// Per-class precision/recall/F1; zero denominators yield 0 so macro
/// averages stay defined on degenerate splits.
inline PrfScores precision_recall_f1(const ConfusionMatrix& cm) {
    const std::size_t c = cm.classes();
    if (c < 2) throw ConfigError("precision_recall_f1: need at least 2 classes");
    PrfScores s;
    s.precision.resize(c);
    s.recall.resize(c);
    s.f1.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        const double tp = static_cast<double>(cm.counts[i][i]);
        const double col = static_cast<double>(cm.col_sum(i));
        const double row = static_cast<double>(cm.row_sum(i));
        s.precision[i] = col > 0.0 ? tp / col : 0.0;
        s.recall[i] = row > 0.0 ? tp / row : 0.0;
        const double pr = s.precision[i] + s.recall[i];
        s.f1[i] = pr > 0.0 ? 2.0 * s.precision[i] * s.recall[i] / pr : 0.0;
        s.macro_precision += s.precision[i];
        s.macro_recall += s.recall[i];
        s.macro_f1 += s.f1[i];
    }
    s.macro_precision /= static_cast<double>(c);
    s.macro_recall /= static_cast<double>(c);
    s.macro_f1 /= static_cast<double>(c);
    return s;
}

/// Chance-corrected agreement: kappa = (p_o - p_e) / (1 - p_e).
inline double cohens_kappa(const ConfusionMatrix& cm) {
    const double total = static_cast<double>(cm.total());
    if (total <= 0.0) throw ConfigError("cohens_kappa: empty matrix");
    const double po = static_cast<double>(cm.trace()) / total;
    double pe = 0.0;
    for (std::size_t i = 0; i < cm.classes(); ++i)
        pe += static_cast<double>(cm.row_sum(i)) * static_cast<double>(cm.col_sum(i)) /
              (total * total);
    if (pe >= 1.0) {
        if (po == 1.0) return 1.0;
        throw NumericError("cohens_kappa: degenerate marginals with imperfect agreement");
    }
    return (po - pe) / (1.0 - pe);
}

// ---------------------------------------------------------------------------
// ROC / AUC
// ---------------------------------------------------------------------------

struct RocCurve {
    std::vector<std::pair<double, double>> points; // (fpr, tpr), (0,0) .. (1,1)
    double auc = 0.0;
};

/// One-vs-rest ROC by descending-score threshold sweep; tied scores advance
/// as a single step. AUC by the trapezoid rule.
inline RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ConfigError("roc_curve: scores/labels length mismatch");
    std::int64_t pos = 0, neg = 0;
    for (int l : labels) (l != 0 ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw ConfigError("roc_curve: need both positive and negative samples for an AUC");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b; // stable for determinism
    });

    RocCurve roc;
    roc.points.emplace_back(0.0, 0.0);
    double auc = 0.0;
    std::int64_t tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] != 0 ? tp : fp)++;
            ++i;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        roc.points.emplace_back(fpr, tpr);
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    roc.auc = auc;
    return roc;
}

// ---------------------------------------------------------------------------
// Latency
// ---------------------------------------------------------------------------

struct LatencyStats {
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    std::size_t iterations = 0;
};

/// Warm up (10 calls, excluded), then time `iterations` calls on the
/// monotonic clock. Only one benchmark may run per process at a time.
inline LatencyStats latency_benchmark(const std::function<void()>& fn, std::size_t iterations) {
    if (iterations < 10) throw ConfigError("latency_benchmark: need at least 10 iterations");
    static std::atomic<bool> busy{false};
    bool expected = false;
    if (!busy.compare_exchange_strong(expected, true))
        throw ConfigError("latency_benchmark: another benchmark is already running");

    for (int i = 0; i < 10; ++i) fn();

    std::vector<double> ms(iterations);
    for (std::size_t i = 0; i < iterations; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    busy.store(false);

    LatencyStats stats;
    stats.iterations = iterations;
    double sum = 0.0;
    for (double v : ms) sum += v;
    stats.mean_ms = sum / static_cast<double>(iterations);
    std::sort(ms.begin(), ms.end());
    auto pick = [&](double q) {
        const std::size_t idx = std::min(
            ms.size() - 1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(ms.size()))) -
                               (q > 0.0 ? 1 : 0));
        return ms[idx];
    };
    stats.p50_ms = pick(0.50);
    stats.p95_ms = pick(0.95);
    return stats;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

struct EvalReport {
    double accuracy = 0.0;
    double kappa = 0.0;
    PrfScores prf;
    ConfusionMatrix confusion;
    Array2D confusion_normalized;
    std::vector<std::optional<RocCurve>> roc; // per class; nullopt = undefined
    std::optional<LatencyStats> end_to_end;   // filled by the benchmark path only
    std::optional<LatencyStats> inference;
};

/// Build every §-style metric from true labels and per-class scores
/// (rows = samples, row length = classes). Predictions are score argmaxes.
inline EvalReport build_eval_report(const std::vector<int>& y_true,
                                    const std::vector<std::vector<double>>& scores,
                                    std::size_t classes) {
    if (y_true.size() != scores.size())
        throw ConfigError("build_eval_report: scores/labels length mismatch");
    std::vector<int> y_pred(y_true.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != classes)
            throw ConfigError("build_eval_report: score row has wrong width");
        y_pred[i] = static_cast<int>(std::distance(
            scores[i].begin(), std::max_element(scores[i].begin(), scores[i].end())));
    }

    EvalReport report;
    report.confusion = confusion_matrix(y_true, y_pred, classes);
    report.confusion_normalized = row_normalize(report.confusion);
    report.accuracy = accuracy(report.confusion);
    report.kappa = cohens_kappa(report.confusion);
    report.prf = precision_recall_f1(report.confusion);

    report.roc.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> s(y_true.size());
        std::vector<int> l(y_true.size());
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            s[i] = scores[i][c];
            l[i] = y_true[i] == static_cast<int>(c) ? 1 : 0;
        }
        try {
            report.roc[c] = roc_curve(s, l);
        } catch (const ConfigError&) {
            report.roc[c] = std::nullopt; // class absent from this split
        }
    }
    return report;
}

inline nlohmann::ordered_json latency_to_json(const LatencyStats& s) {
    return {{"mean_ms", s.mean_ms},
            {"p50_ms", s.p50_ms},
            {"p95_ms", s.p95_ms},
            {"iterations", s.iterations}};
}

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["accuracy"] = r.accuracy;
    j["kappa"] = r.kappa;
    j["classes"] = r.confusion.classes();
    j["per_class"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < r.confusion.classes(); ++c) {
        nlohmann::ordered_json pc{{"precision", r.prf.precision[c]},
                                  {"recall", r.prf.recall[c]},
                                  {"f1", r.prf.f1[c]}};
        if (r.roc.size() > c && r.roc[c])
            pc["auc"] = r.roc[c]->auc;
        else
            pc["auc"] = nullptr;
        j["per_class"].push_back(pc);
    }
    j["macro"] = {{"precision", r.prf.macro_precision},
                  {"recall", r.prf.macro_recall},
                  {"f1", r.prf.macro_f1}};
    j["confusion"] = r.confusion.counts;
    j["confusion_normalized"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.confusion_normalized.rows; ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < r.confusion_normalized.cols; ++k)
            row.push_back(r.confusion_normalized.at(i, k));
        j["confusion_normalized"].push_back(row);
    }
    j["roc"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < r.roc.size(); ++c) {
        nlohmann::ordered_json rc{{"class", c}};
        if (r.roc[c]) {
            rc["auc"] = r.roc[c]->auc;
            nlohmann::ordered_json pts = nlohmann::ordered_json::array();
            for (const auto& [fpr, tpr] : r.roc[c]->points) pts.push_back({fpr, tpr});
            rc["points"] = pts;
        } else {
            rc["auc"] = nullptr;
            rc["points"] = nlohmann::ordered_json::array();
        }
        j["roc"].push_back(rc);
    }
    if (r.end_to_end) j["latency_end_to_end"] = latency_to_json(*r.end_to_end);
    if (r.inference) j["latency_inference"] = latency_to_json(*r.inference);
    return j;
}

} // namespace gtcnn
