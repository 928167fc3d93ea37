#include "sylva/eval_metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sylva/errors.hpp"

namespace sylva {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (int i = 0; i < n; ++i) s += at(i, i);
    return s;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.n != n) throw InputError("confusion matrix size mismatch in merge");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const std::vector<int>& gt, const std::vector<int>& pred, int n) {
    if (gt.size() != pred.size()) throw InputError("gt/pred length mismatch");
    if (n <= 0) throw InputError("class count must be positive");
    ConfusionMatrix cm;
    cm.n = n;
    cm.counts.assign(static_cast<std::size_t>(n) * n, 0);
    for (std::size_t k = 0; k < gt.size(); ++k) {
        if (gt[k] < 0 || gt[k] >= n || pred[k] < 0 || pred[k] >= n)
            throw InputError("label out of range [0, n)");
        cm.at(gt[k], pred[k])++;
    }
    return cm;
}

SemanticMetrics semantic_metrics(const ConfusionMatrix& cm) {
    const int n = cm.n;
    const double total = static_cast<double>(cm.total());
    if (!(total > 0)) throw InputError("confusion matrix is empty");

    SemanticMetrics m;
    m.oa = cm.trace() / total;
    m.per_class_iou.resize(n);
    m.per_class_precision.resize(n);
    m.per_class_recall.resize(n);
    m.per_class_f1.resize(n);
    m.per_class_accuracy.resize(n);
    m.per_class_kappa.resize(n);
    m.zero_support.resize(n);

    std::vector<double> row(n, 0), col(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            row[i] += static_cast<double>(cm.at(i, j));
            col[j] += static_cast<double>(cm.at(i, j));
        }

    double sum_recall = 0, sum_iou = 0;
    for (int i = 0; i < n; ++i) {
        double tp = static_cast<double>(cm.at(i, i));
        double fp = col[i] - tp;
        double fn = row[i] - tp;
        double tn = total - tp - fp - fn;
        m.zero_support[i] = row[i] == 0 && col[i] == 0;

        // 0/0 denominators resolve to 1 (flagged via zero_support)
        double precision = tp + fp > 0 ? tp / (tp + fp) : 1.0;
        double recall = tp + fn > 0 ? tp / (tp + fn) : 1.0;
        double iou = tp + fp + fn > 0 ? tp / (tp + fp + fn) : 1.0;
        double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        double acc = (tp + tn) / total;
        double pc = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (total * total);
        double kappa = 1 - pc > 0 ? (acc - pc) / (1 - pc) : (acc == 1.0 ? 1.0 : 0.0);

        m.per_class_precision[i] = precision;
        m.per_class_recall[i] = recall;
        m.per_class_iou[i] = iou;
        m.per_class_f1[i] = f1;
        m.per_class_accuracy[i] = acc;
        m.per_class_kappa[i] = kappa;
        sum_recall += recall;
        sum_iou += iou;
    }
    m.macc = sum_recall / n;
    m.miou = sum_iou / n;

    double pe = 0;
    for (int i = 0; i < n; ++i) pe += row[i] * col[i] / (total * total);
    m.kappa = 1 - pe > 0 ? (m.oa - pe) / (1 - pe) : (m.oa == 1.0 ? 1.0 : 0.0);
    return m;
}

InstanceMatchResult match_instances(const std::vector<std::uint32_t>& gt_labels,
                                    const std::vector<std::uint32_t>& pred_labels,
                                    double iou_threshold) {
    if (gt_labels.size() != pred_labels.size()) throw InputError("gt/pred length mismatch");

    std::map<std::uint32_t, std::uint64_t> gt_size, pred_size;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> inter;
    for (std::size_t k = 0; k < gt_labels.size(); ++k) {
        std::uint32_t g = gt_labels[k], p = pred_labels[k];
        if (g != 0) gt_size[g]++;
        if (p != 0) pred_size[p]++;
        if (g != 0 && p != 0) inter[{g, p}]++;
    }

    struct Cand {
        double iou;
        std::uint32_t gt_id, pred_id;
    };
    std::vector<Cand> cands;
    for (const auto& [key, cnt] : inter) {
        double uni = static_cast<double>(gt_size[key.first] + pred_size[key.second] - cnt);
        double iou = cnt / uni;
        if (iou >= iou_threshold) cands.push_back({iou, key.first, key.second});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
        return a.pred_id < b.pred_id;
    });

    InstanceMatchResult res;
    std::set<std::uint32_t> used_gt, used_pred;
    for (const auto& c : cands) {
        if (used_gt.count(c.gt_id) || used_pred.count(c.pred_id)) continue;
        used_gt.insert(c.gt_id);
        used_pred.insert(c.pred_id);
        res.matches.push_back({c.gt_id, c.pred_id, c.iou});
    }
    for (const auto& [id, sz] : gt_size)
        if (!used_gt.count(id)) res.unmatched_gt.push_back(id);
    for (const auto& [id, sz] : pred_size)
        if (!used_pred.count(id)) res.unmatched_pred.push_back(id);
    res.tp = static_cast<int>(res.matches.size());
    res.fn = static_cast<int>(res.unmatched_gt.size());
    res.fp = static_cast<int>(res.unmatched_pred.size());
    return res;
}

DetectionMetrics detection_metrics(const InstanceMatchResult& r) {
    if (r.tp + r.fn == 0 && r.tp + r.fp == 0)
        throw DomainError("detection metrics undefined: no instances at all");
    DetectionMetrics d;
    d.completeness = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 1.0;
    d.omission_error = 1.0 - d.completeness;
    double precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 1.0;
    d.commission_error = 1.0 - precision;
    d.f1 = precision + d.completeness > 0
               ? 2 * precision * d.completeness / (precision + d.completeness)
               : 0.0;
    return d;
}

}  // namespace sylva
