#ifndef SYLVA_EVAL_METRICS_HPP
#define SYLVA_EVAL_METRICS_HPP

#include <cstdint>
#include <vector>

namespace sylva {

// rows = ground truth, columns = prediction
struct ConfusionMatrix {
    int n = 0;
    std::vector<std::uint64_t> counts;  // row-major n x n

    std::uint64_t& at(int gt, int pred) { return counts[static_cast<std::size_t>(gt) * n + pred]; }
    std::uint64_t at(int gt, int pred) const {
        return counts[static_cast<std::size_t>(gt) * n + pred];
    }
    std::uint64_t total() const;
    std::uint64_t trace() const;

    // chunk accumulation is associative; merge partial matrices with this
    void merge(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const std::vector<int>& gt, const std::vector<int>& pred, int n);

struct SemanticMetrics {
    double oa = 0;     // overall accuracy, trace/total
    double macc = 0;   // mean of per-class recall
    double miou = 0;
    std::vector<double> per_class_iou;
    std::vector<double> per_class_precision;
    std::vector<double> per_class_recall;
    std::vector<double> per_class_f1;
    std::vector<double> per_class_accuracy;  // one-vs-rest accuracy, reported separately
    std::vector<double> per_class_kappa;     // one-vs-rest Cohen's kappa
    double kappa = 0;                        // multi-class Cohen's kappa on the full matrix
    std::vector<bool> zero_support;          // class absent in both gt and pred; metrics pinned to 1
};

SemanticMetrics semantic_metrics(const ConfusionMatrix& cm);

struct InstanceMatch {
    std::uint32_t gt_id = 0;
    std::uint32_t pred_id = 0;
    double iou = 0;
};

struct InstanceMatchResult {
    std::vector<InstanceMatch> matches;
    std::vector<std::uint32_t> unmatched_gt;
    std::vector<std::uint32_t> unmatched_pred;
    int tp = 0, fp = 0, fn = 0;
};

// Point-set IoU matching; id 0 is reserved for non-instance points and is
// excluded. Candidates with IoU >= threshold are greedily accepted in
// descending IoU order (ties toward lower gt_id, then lower pred_id),
// one-to-one.
InstanceMatchResult match_instances(const std::vector<std::uint32_t>& gt_labels,
                                    const std::vector<std::uint32_t>& pred_labels,
                                    double iou_threshold = 0.5);

struct DetectionMetrics {
    double completeness = 0;     // recall
    double omission_error = 0;   // 1 - recall
    double commission_error = 0; // 1 - precision
    double f1 = 0;
};

DetectionMetrics detection_metrics(const InstanceMatchResult& result);

}  // namespace sylva

#endif
