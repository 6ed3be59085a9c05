// Confusion-matrix evaluation: macro/micro/weighted precision, recall and
// F1, subset accuracy, and mean IoU.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raunet/tensor.hpp"

namespace raunet {

// K x K counts; entry (i,j) = pixels of true class i predicted as class j,
// with classes indexed 1..K. Ignore-labeled pixels never enter.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {
        RAUNET_CHECK(k >= 1, "confusion matrix needs at least one class");
    }

    std::size_t num_classes() const { return k_; }
    std::uint64_t at(std::size_t true_c, std::size_t pred_c) const {  // 1-based classes
        return counts_[(true_c - 1) * k_ + (pred_c - 1)];
    }

    void add(std::uint8_t label, std::uint8_t pred) {
        if (label == 0) return;
        RAUNET_CHECK(label <= k_, "label " << int(label) << " out of range 1.." << k_);
        RAUNET_CHECK(pred >= 1 && pred <= k_, "prediction " << int(pred) << " out of range 1.." << k_);
        ++counts_[(label - 1) * k_ + (pred - 1)];
    }

    void accumulate(const U8Raster& labels, const U8Raster& predictions);

    // Elementwise sum; enables parallel per-patch accumulation with a
    // deterministic final merge.
    void merge(const ConfusionMatrix& other) {
        RAUNET_CHECK(other.k_ == k_, "cannot merge confusion matrices of different K");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts_) t += c;
        return t;
    }

    std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
    std::uint64_t support(std::size_t c) const {  // TP + FN (row sum)
        std::uint64_t s = 0;
        for (std::size_t j = 1; j <= k_; ++j) s += at(c, j);
        return s;
    }
    std::uint64_t predicted(std::size_t c) const {  // TP + FP (column sum)
        std::uint64_t s = 0;
        for (std::size_t i = 1; i <= k_; ++i) s += at(i, c);
        return s;
    }

    std::string to_csv() const;

private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

// Per-pixel argmax over the K logit channels, classes 1..K; ties break
// toward the lowest class index.
U8Raster argmax_predictions(const Tensor& logits);

ConfusionMatrix confusion_matrix(const U8Raster& labels, const U8Raster& predictions, std::size_t k);

enum class Averaging { Macro, Micro, Weighted };

struct PrecisionRecallF1 {
    double precision = 0, recall = 0, f1 = 0;
};

// Macro averages over classes with support > 0; weighted is the
// support-weighted mean; micro pools counts. Per-class 0/0 is defined as 0.
PrecisionRecallF1 precision_recall_f1(const ConfusionMatrix& cm, Averaging averaging);

// Mean per-class IoU over classes with TP+FP+FN > 0.
double iou(const ConfusionMatrix& cm);

// trace / total.
double subset_accuracy(const ConfusionMatrix& cm);

struct MetricReport {
    double macro_precision = 0, micro_precision = 0, weighted_precision = 0;
    double macro_recall = 0, micro_recall = 0, weighted_recall = 0;
    double macro_f1 = 0, micro_f1 = 0, weighted_f1 = 0;
    double subset_accuracy = 0;
    double iou = 0;
};

MetricReport compute_metrics(const ConfusionMatrix& cm);

// One row per metric.
std::string metric_report_to_csv(const MetricReport& r);
std::string metric_report_to_json(const MetricReport& r);

}  // namespace raunet
