#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sylva/errors.hpp"
#include "sylva/eval_metrics.hpp"
#include "sylva/rng.hpp"

using namespace sylva;

namespace {

ConfusionMatrix matrix(int n, std::vector<std::uint64_t> counts) {
    ConfusionMatrix cm;
    cm.n = n;
    cm.counts = std::move(counts);
    return cm;
}

}  // namespace

TEST_CASE("confusion matrix construction and merge") {
    std::vector<int> gt{0, 0, 1, 1};
    std::vector<int> pred{0, 1, 1, 1};
    ConfusionMatrix cm = confusion(gt, pred, 2);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.total() == 4);
    CHECK(cm.trace() == 3);

    ConfusionMatrix other = confusion({1, 0}, {1, 0}, 2);
    cm.merge(other);
    CHECK(cm.total() == 6);
    CHECK(cm.trace() == 5);

    CHECK_THROWS_AS(confusion({0, 1}, {0}, 2), InputError);
    CHECK_THROWS_AS(confusion({0, 5}, {0, 1}, 2), InputError);
}

TEST_CASE("perfect prediction yields all-ones metrics") {
    ConfusionMatrix cm = matrix(3, {10, 0, 0, 0, 20, 0, 0, 0, 30});
    SemanticMetrics m = semantic_metrics(cm);
    CHECK(m.oa == doctest::Approx(1.0));
    CHECK(m.macc == doctest::Approx(1.0));
    CHECK(m.miou == doctest::Approx(1.0));
    CHECK(m.kappa == doctest::Approx(1.0));
    for (int i = 0; i < 3; ++i) {
        CHECK(m.per_class_iou[i] == doctest::Approx(1.0));
        CHECK(m.per_class_f1[i] == doctest::Approx(1.0));
        CHECK(m.per_class_kappa[i] == doctest::Approx(1.0));
        CHECK(!m.zero_support[i]);
    }
}

TEST_CASE("hand-computed binary case") {
    // gt rows, pred columns: [[5,1],[2,12]]
    ConfusionMatrix cm = matrix(2, {5, 1, 2, 12});
    SemanticMetrics m = semantic_metrics(cm);
    CHECK(m.oa == doctest::Approx(17.0 / 20.0).epsilon(1e-12));
    CHECK(m.per_class_precision[0] == doctest::Approx(5.0 / 7.0).epsilon(1e-12));
    CHECK(m.per_class_recall[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(m.per_class_iou[0] == doctest::Approx(5.0 / 8.0).epsilon(1e-12));
    CHECK(m.per_class_precision[1] == doctest::Approx(12.0 / 13.0).epsilon(1e-12));
    CHECK(m.per_class_recall[1] == doctest::Approx(12.0 / 14.0).epsilon(1e-12));
    CHECK(m.per_class_iou[1] == doctest::Approx(12.0 / 15.0).epsilon(1e-12));
    CHECK(m.macc == doctest::Approx((5.0 / 6.0 + 12.0 / 14.0) / 2).epsilon(1e-12));
    CHECK(m.miou == doctest::Approx((5.0 / 8.0 + 12.0 / 15.0) / 2).epsilon(1e-12));
    double f1_0 = 2 * (5.0 / 7.0) * (5.0 / 6.0) / (5.0 / 7.0 + 5.0 / 6.0);
    CHECK(m.per_class_f1[0] == doctest::Approx(f1_0).epsilon(1e-12));
}

TEST_CASE("one-vs-rest kappa on a symmetric matrix") {
    // acc = 0.8, pe = 0.5 -> kappa = 0.6, identical for both classes and the
    // multiclass statistic
    ConfusionMatrix cm = matrix(2, {40, 10, 10, 40});
    SemanticMetrics m = semantic_metrics(cm);
    CHECK(m.per_class_kappa[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.per_class_kappa[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.kappa == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.per_class_accuracy[0] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("absent class is pinned to 1 and flagged") {
    // class 2 never appears in gt or pred
    ConfusionMatrix cm = matrix(3, {8, 2, 0, 1, 9, 0, 0, 0, 0});
    SemanticMetrics m = semantic_metrics(cm);
    CHECK(m.zero_support[2]);
    CHECK(!m.zero_support[0]);
    CHECK(m.per_class_iou[2] == doctest::Approx(1.0));
    CHECK(m.per_class_recall[2] == doctest::Approx(1.0));
    // mean metrics still include the pinned class
    CHECK(m.miou ==
          doctest::Approx((m.per_class_iou[0] + m.per_class_iou[1] + 1.0) / 3).epsilon(1e-12));

    ConfusionMatrix empty = matrix(2, {0, 0, 0, 0});
    CHECK_THROWS_AS(semantic_metrics(empty), InputError);
}

TEST_CASE("random matrices agree with the brute-force oracle") {
    Rng rng(271828);
    for (int iter = 0; iter < 1000; ++iter) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(n) * n);
        for (auto& c : counts) c = rng.next_u64() % 50;
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        if (total == 0) counts[0] = 1;

        SemanticMetrics got = semantic_metrics(matrix(n, counts));
        oracles::BruteMetrics want = oracles::brute_metrics(n, counts);

        CHECK(got.oa == doctest::Approx(want.oa).epsilon(1e-12));
        CHECK(got.macc == doctest::Approx(want.macc).epsilon(1e-12));
        CHECK(got.miou == doctest::Approx(want.miou).epsilon(1e-12));
        CHECK(got.kappa == doctest::Approx(want.kappa).epsilon(1e-12));
        for (int i = 0; i < n; ++i) {
            CHECK(got.per_class_precision[i] == doctest::Approx(want.precision[i]).epsilon(1e-12));
            CHECK(got.per_class_recall[i] == doctest::Approx(want.recall[i]).epsilon(1e-12));
            CHECK(got.per_class_iou[i] == doctest::Approx(want.iou[i]).epsilon(1e-12));
            CHECK(got.per_class_f1[i] == doctest::Approx(want.f1[i]).epsilon(1e-12));
            CHECK(got.per_class_accuracy[i] == doctest::Approx(want.accuracy[i]).epsilon(1e-12));
            CHECK(got.per_class_kappa[i] == doctest::Approx(want.kappa_ovr[i]).epsilon(1e-12));

            // structural properties
            CHECK(got.per_class_iou[i] <=
                  std::min(got.per_class_precision[i], got.per_class_recall[i]) + 1e-12);
        }
    }
}

TEST_CASE("instance matching") {
    SUBCASE("identity labels match perfectly") {
        std::vector<std::uint32_t> labels{0, 0, 1, 1, 2, 2, 2};
        InstanceMatchResult r = match_instances(labels, labels);
        CHECK(r.tp == 2);
        CHECK(r.fp == 0);
        CHECK(r.fn == 0);
        for (const auto& mt : r.matches) CHECK(mt.iou == doctest::Approx(1.0));
    }

    SUBCASE("constructed tp/fn/fp pattern") {
        // gt instances: 1 (pts 0-3), 2 (pts 4-7), 3 (pts 8-11)
        std::vector<std::uint32_t> gt{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3};
        // pred: 10 covers gt1 exactly; 20 covers 3 of gt2 plus 1 of gt3
        // (IoU 3/5 with gt2); 30 covers one stray point (IoU 1/4 with gt3
        // fails the threshold); gt3 is missed
        std::vector<std::uint32_t> pr{10, 10, 10, 10, 20, 20, 20, 0, 20, 30, 0, 0};
        InstanceMatchResult r = match_instances(gt, pr, 0.5);
        CHECK(r.tp == 2);
        CHECK(r.fn == 1);
        CHECK(r.fp == 1);
        REQUIRE(r.matches.size() == 2);
        CHECK(r.matches[0].gt_id == 1);
        CHECK(r.matches[0].pred_id == 10);
        CHECK(r.matches[0].iou == doctest::Approx(1.0));
        CHECK(r.matches[1].gt_id == 2);
        CHECK(r.matches[1].pred_id == 20);
        CHECK(r.matches[1].iou == doctest::Approx(0.6).epsilon(1e-12));
        REQUIRE(r.unmatched_gt.size() == 1);
        CHECK(r.unmatched_gt[0] == 3);
        REQUIRE(r.unmatched_pred.size() == 1);
        CHECK(r.unmatched_pred[0] == 30);
    }

    SUBCASE("threshold boundary: IoU exactly at threshold is accepted") {
        // IoU = 1/2 between gt 1 (2 pts) and pred 5 (2 pts, one shared... )
        // gt {1,1,0}, pred {5,0,5}: intersection 1, union 3 -> 1/3 < 0.5
        std::vector<std::uint32_t> gt{1, 1, 0};
        std::vector<std::uint32_t> pr{5, 0, 5};
        CHECK(match_instances(gt, pr, 0.5).tp == 0);
        CHECK(match_instances(gt, pr, 1.0 / 3.0).tp == 1);
        CHECK(match_instances(gt, pr, 0.34).tp == 0);
    }

    SUBCASE("invariance to prediction relabeling") {
        Rng rng(5);
        std::vector<std::uint32_t> gt, pr;
        for (int i = 0; i < 300; ++i) {
            gt.push_back(static_cast<std::uint32_t>(rng.next_u64() % 6));
            pr.push_back(static_cast<std::uint32_t>(rng.next_u64() % 6));
        }
        InstanceMatchResult a = match_instances(gt, pr);
        std::vector<std::uint32_t> pr2 = pr;
        for (auto& v : pr2)
            if (v != 0) v += 100;  // bijective relabel keeps 0 reserved
        InstanceMatchResult b = match_instances(gt, pr2);
        CHECK(a.tp == b.tp);
        CHECK(a.fp == b.fp);
        CHECK(a.fn == b.fn);
        REQUIRE(a.matches.size() == b.matches.size());
        for (std::size_t i = 0; i < a.matches.size(); ++i) {
            CHECK(a.matches[i].gt_id == b.matches[i].gt_id);
            CHECK(a.matches[i].pred_id + 100 == b.matches[i].pred_id);
            CHECK(a.matches[i].iou == doctest::Approx(b.matches[i].iou).epsilon(1e-12));
        }
    }

    SUBCASE("mismatched lengths throw") {
        CHECK_THROWS_AS(match_instances({1, 2}, {1}), InputError);
    }
}

TEST_CASE("detection metrics") {
    InstanceMatchResult r;
    r.tp = 2;
    r.fn = 1;
    r.fp = 1;
    DetectionMetrics d = detection_metrics(r);
    CHECK(d.completeness == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(d.omission_error == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d.commission_error == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d.f1 == doctest::Approx(2.0 * 2 / (2.0 * 2 + 1 + 1)).epsilon(1e-12));
    CHECK(d.completeness + d.omission_error == doctest::Approx(1.0).epsilon(1e-12));

    InstanceMatchResult perfect;
    perfect.tp = 5;
    DetectionMetrics dp = detection_metrics(perfect);
    CHECK(dp.completeness == doctest::Approx(1.0));
    CHECK(dp.omission_error == doctest::Approx(0.0));
    CHECK(dp.commission_error == doctest::Approx(0.0));
    CHECK(dp.f1 == doctest::Approx(1.0));

    InstanceMatchResult nothing;
    CHECK_THROWS_AS(detection_metrics(nothing), DomainError);
}
