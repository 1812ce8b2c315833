#include "leapmood/eval.hpp"

#include <algorithm>
#include <sstream>

#include "leapmood/common.hpp"

namespace leapmood::eval {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (std::uint64_t c : counts) sum += c;
    return sum;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.label_count != label_count) throw InputError("confusion matrix size mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred,
                          std::size_t label_count) {
    if (gold.size() != pred.size()) {
        throw InputError("confusion: gold has " + std::to_string(gold.size()) +
                         " labels but pred has " + std::to_string(pred.size()));
    }
    ConfusionMatrix cm(label_count);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const int g = gold[i], p = pred[i];
        if (g < 0 || p < 0 || static_cast<std::size_t>(g) >= label_count ||
            static_cast<std::size_t>(p) >= label_count) {
            throw InputError("confusion: label out of range at position " + std::to_string(i));
        }
        ++cm.at(static_cast<std::size_t>(g), static_cast<std::size_t>(p));
    }
    return cm;
}

namespace {

double safe_div(std::uint64_t num, std::uint64_t den, bool* flag = nullptr) {
    if (den == 0) {
        if (flag) *flag = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) {
    if (p == r) return p;  // keeps micro P = R = F1 = accuracy an exact identity
    return (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

MetricReport metrics(const ConfusionMatrix& cm, const std::vector<int>& excluded) {
    const std::size_t labels = cm.label_count;
    std::vector<bool> is_excluded(labels, false);
    for (int id : excluded) {
        if (id < 0 || static_cast<std::size_t>(id) >= labels) {
            throw InputError("metrics: excluded class id out of range: " + std::to_string(id));
        }
        is_excluded[static_cast<std::size_t>(id)] = true;
    }
    if (std::all_of(is_excluded.begin(), is_excluded.end(), [](bool b) { return b; })) {
        throw InputError("metrics: every class is excluded");
    }

    MetricReport report;
    report.excluded = excluded;
    report.per_class.resize(labels);

    std::uint64_t micro_tp = 0, micro_fp = 0, micro_fn = 0;
    double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
    std::size_t included = 0;

    for (std::size_t c = 0; c < labels; ++c) {
        std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (std::size_t o = 0; o < labels; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);  // predicted c, gold elsewhere (excluded golds count)
            fn += cm.at(c, o);  // gold c, predicted elsewhere (excluded preds count)
        }
        ClassMetrics& m = report.per_class[c];
        m.precision = safe_div(tp, tp + fp, &m.zero_denominator);
        m.recall = safe_div(tp, tp + fn, &m.zero_denominator);
        m.f1 = harmonic(m.precision, m.recall);

        if (!is_excluded[c]) {
            ++included;
            micro_tp += tp;
            micro_fp += fp;
            micro_fn += fn;
            macro_p += m.precision;
            macro_r += m.recall;
            macro_f += m.f1;
        }
    }

    report.macro_precision = macro_p / static_cast<double>(included);
    report.macro_recall = macro_r / static_cast<double>(included);
    report.macro_f1_mean = macro_f / static_cast<double>(included);
    report.macro_f1_harmonic = harmonic(report.macro_precision, report.macro_recall);
    report.micro_precision = safe_div(micro_tp, micro_tp + micro_fp);
    report.micro_recall = safe_div(micro_tp, micro_tp + micro_fn);
    report.micro_f1 = harmonic(report.micro_precision, report.micro_recall);
    return report;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) return 1.0;
    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < cm.label_count; ++c) diag += cm.at(c, c);
    return static_cast<double>(diag) / static_cast<double>(total);
}

std::string report_table(const MetricReport& report, const std::vector<std::string>& names) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << "class                precision  recall     f1\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& m = report.per_class[c];
        const bool ex =
            std::find(report.excluded.begin(), report.excluded.end(), static_cast<int>(c)) !=
            report.excluded.end();
        std::string name = c < names.size() ? names[c] : ("class" + std::to_string(c));
        if (ex) name += " (excluded)";
        out << name;
        for (std::size_t pad = name.size(); pad < 21; ++pad) out << ' ';
        out << m.precision << "     " << m.recall << "     " << m.f1;
        if (m.zero_denominator) out << "  [zero denominator]";
        out << '\n';
    }
    out << "macro (mean of F1)   " << report.macro_precision << "     " << report.macro_recall
        << "     " << report.macro_f1_mean << '\n';
    out << "macro (harmonic PR)  " << report.macro_precision << "     " << report.macro_recall
        << "     " << report.macro_f1_harmonic << '\n';
    out << "micro                " << report.micro_precision << "     " << report.micro_recall
        << "     " << report.micro_f1 << '\n';
    return out.str();
}

std::string report_csv(const MetricReport& report, const std::vector<std::string>& names) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(6);
    out << "class,precision,recall,f1,excluded,zero_denominator\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& m = report.per_class[c];
        const bool ex =
            std::find(report.excluded.begin(), report.excluded.end(), static_cast<int>(c)) !=
            report.excluded.end();
        out << (c < names.size() ? names[c] : "class" + std::to_string(c)) << ',' << m.precision
            << ',' << m.recall << ',' << m.f1 << ',' << (ex ? 1 : 0) << ','
            << (m.zero_denominator ? 1 : 0) << '\n';
    }
    out << "macro_mean_f1," << report.macro_precision << ',' << report.macro_recall << ','
        << report.macro_f1_mean << ",,\n";
    out << "macro_harmonic_f1," << report.macro_precision << ',' << report.macro_recall << ','
        << report.macro_f1_harmonic << ",,\n";
    out << "micro," << report.micro_precision << ',' << report.micro_recall << ','
        << report.micro_f1 << ",,\n";
    return out.str();
}

}  // namespace leapmood::eval
