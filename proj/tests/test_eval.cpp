#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "leapmood/eval.hpp"
#include "leapmood/rng.hpp"

using namespace leapmood;
using namespace leapmood::eval;

TEST_CASE("confusion matrix construction") {
    SUBCASE("perfect predictions give a diagonal matrix") {
        const auto cm = confusion({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
        CHECK(cm.at(0, 0) == 1);
        CHECK(cm.at(1, 1) == 2);
        CHECK(cm.at(2, 2) == 1);
        CHECK(cm.total() == 4);
        CHECK(accuracy(cm) == 1.0);
    }
    SUBCASE("swapped predictions give the anti-diagonal") {
        const auto cm = confusion({0, 1}, {1, 0}, 2);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(1, 0) == 1);
        CHECK(cm.at(0, 0) == 0);
        CHECK(accuracy(cm) == 0.0);
    }
    SUBCASE("empty inputs give a zero matrix") {
        const auto cm = confusion({}, {}, 4);
        CHECK(cm.total() == 0);
    }
    SUBCASE("length mismatch is an error") {
        CHECK_THROWS_AS(confusion({0}, {0, 1}, 2), InputError);
    }
}

TEST_CASE("metrics: diagonal matrix scores 1.0 everywhere with nothing excluded") {
    const auto cm = confusion({0, 1, 2}, {0, 1, 2}, 3);
    const auto report = metrics(cm, {});
    CHECK(report.micro_f1 == doctest::Approx(1.0));
    CHECK(report.macro_f1_mean == doctest::Approx(1.0));
    for (const auto& m : report.per_class) CHECK(m.f1 == doctest::Approx(1.0));
}

TEST_CASE("metrics: exclusion rule reproduces the hand-computed micro P/R") {
    // classes: 0 = other (excluded), 1 = happy, 2 = sad
    ConfusionMatrix cm(3);
    cm.at(0, 1) = 2;  // gold other -> pred happy
    cm.at(1, 0) = 1;  // gold happy -> pred other
    cm.at(1, 1) = 3;  // gold happy -> pred happy

    const auto report = metrics(cm, {0});
    CHECK(report.micro_precision == doctest::Approx(3.0 / 5.0).epsilon(1e-12));
    CHECK(report.micro_recall == doctest::Approx(3.0 / 4.0).epsilon(1e-12));
    // exclusion is exactly what lets micro P differ from micro R
    CHECK(report.micro_precision != doctest::Approx(report.micro_recall));
}

TEST_CASE("metrics: published micro triple is internally consistent") {
    const double p = 59.75, r = 64.55, f1 = 62.05;
    const double harmonic = 2.0 * p * r / (p + r);
    CHECK(std::abs(harmonic - f1) < 0.05);
}

TEST_CASE("metrics: published macro row used mean-of-F1s, not harmonic of macro P/R") {
    // macro P 43.38, macro R 52.84 give harmonic 47.65; the published macro F1
    // is 45.98, so the mean-of-per-class-F1 convention is the one implemented
    const double p = 43.38, r = 52.84;
    const double harmonic = 2.0 * p * r / (p + r);
    CHECK(harmonic == doctest::Approx(47.65).epsilon(1e-3));
    CHECK(std::abs(harmonic - 45.98) > 1.0);  // the two conventions are distinguishable
}

TEST_CASE("metrics: with nothing excluded, micro P = R = F1 = accuracy") {
    Rng rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        const auto labels = static_cast<std::size_t>(rng.uniform_int(2, 6));
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 200));
        std::vector<int> gold(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(labels) - 1));
            pred[i] = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(labels) - 1));
        }
        const auto cm = confusion(gold, pred, labels);
        const auto report = metrics(cm, {});
        const double acc = accuracy(cm);
        CHECK(report.micro_precision == doctest::Approx(acc).epsilon(1e-12));
        CHECK(report.micro_recall == doctest::Approx(acc).epsilon(1e-12));
        if (acc > 0.0) CHECK(report.micro_f1 == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("metrics: invariant under simultaneous class-id permutation") {
    Rng rng(72);
    const std::size_t labels = 4;
    std::vector<int> gold, pred;
    for (int i = 0; i < 300; ++i) {
        gold.push_back(static_cast<int>(rng.uniform_int(0, 3)));
        pred.push_back(static_cast<int>(rng.uniform_int(0, 3)));
    }
    const auto base = metrics(confusion(gold, pred, labels), {1});

    const std::vector<int> perm = {2, 3, 1, 0};  // new id of each old id
    std::vector<int> gold_p, pred_p;
    for (int g : gold) gold_p.push_back(perm[static_cast<std::size_t>(g)]);
    for (int p : pred) pred_p.push_back(perm[static_cast<std::size_t>(p)]);
    const auto permuted = metrics(confusion(gold_p, pred_p, labels), {perm[1]});

    CHECK(permuted.micro_precision == doctest::Approx(base.micro_precision).epsilon(1e-12));
    CHECK(permuted.micro_recall == doctest::Approx(base.micro_recall).epsilon(1e-12));
    CHECK(permuted.macro_f1_mean == doctest::Approx(base.macro_f1_mean).epsilon(1e-12));
    for (std::size_t c = 0; c < labels; ++c) {
        CHECK(permuted.per_class[static_cast<std::size_t>(perm[c])].f1 ==
              doctest::Approx(base.per_class[c].f1).epsilon(1e-12));
    }
}

TEST_CASE("metrics: zero denominators score 0 and are flagged") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 5;  // class 1 and 2 never appear
    const auto report = metrics(cm, {});
    CHECK(report.per_class[1].precision == 0.0);
    CHECK(report.per_class[1].zero_denominator);
    CHECK_FALSE(report.per_class[0].zero_denominator);
}

TEST_CASE("metrics: excluding every class is an error") {
    ConfusionMatrix cm(2);
    CHECK_THROWS_AS(metrics(cm, {0, 1}), InputError);
    CHECK_THROWS_AS(metrics(cm, {5}), InputError);
}

TEST_CASE("report renders both table and CSV") {
    const auto cm = confusion({0, 1, 1}, {0, 1, 0}, 2);
    const auto report = metrics(cm, {});
    const std::string table = report_table(report, {"other", "happy"});
    CHECK(table.find("other") != std::string::npos);
    CHECK(table.find("micro") != std::string::npos);
    const std::string csv = report_csv(report, {"other", "happy"});
    CHECK(csv.find("class,precision,recall,f1,excluded,zero_denominator") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 2 classes + 3 summary rows
}
