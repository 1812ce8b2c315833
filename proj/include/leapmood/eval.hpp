#ifndef LEAPMOOD_EVAL_HPP
#define LEAPMOOD_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "leapmood/common.hpp"

namespace leapmood::eval {

/// rows = gold, cols = predicted.
struct ConfusionMatrix {
    std::size_t label_count = 0;
    std::vector<std::uint64_t> counts;  // label_count x label_count, row-major

    explicit ConfusionMatrix(std::size_t labels)
        : label_count(labels), counts(labels * labels, 0) {}

    std::uint64_t& at(std::size_t gold, std::size_t pred) {
        return counts[gold * label_count + pred];
    }
    std::uint64_t at(std::size_t gold, std::size_t pred) const {
        return counts[gold * label_count + pred];
    }
    std::uint64_t total() const;
    void add(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred,
                          std::size_t label_count);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_denominator = false;  // flagged per the 0-convention
};

struct MetricReport {
    std::vector<ClassMetrics> per_class;  // every class, excluded ones too
    std::vector<int> excluded;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1_mean = 0.0;      // mean of per-class F1 (the published convention)
    double macro_f1_harmonic = 0.0;  // harmonic of macro P/R, exposed alongside
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
};

/// Micro counts pool only included classes, but predictions/golds that fall
/// on an excluded class still count as errors of the included side. That is
/// exactly what lets micro P differ from micro R.
MetricReport metrics(const ConfusionMatrix& cm, const std::vector<int>& excluded);

/// Plain accuracy: trace / total (1.0 on an empty matrix).
double accuracy(const ConfusionMatrix& cm);

std::string report_table(const MetricReport& report, const std::vector<std::string>& names);
std::string report_csv(const MetricReport& report, const std::vector<std::string>& names);

}  // namespace leapmood::eval

#endif
