// Benchmark comparing the serial reference kernels against their OpenMP
// counterparts: batch gradient accumulation, k-means point assignment, and a
// GA fitness evaluation wave. Every pair is required to agree bit for bit;
// the speedup column is the point of the exercise.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "leapmood/erc.hpp"
#include "leapmood/ga.hpp"
#include "leapmood/mood.hpp"
#include "leapmood/parallel.hpp"
#include "leapmood/rng.hpp"

using namespace leapmood;

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

EncodedUtterance random_utterance(Rng& rng, std::size_t max_seq, std::size_t max_chars,
                                  std::size_t vocab, std::size_t cvocab) {
    EncodedUtterance utt;
    utt.max_seq_len = max_seq;
    utt.max_char_len = max_chars;
    utt.valid_len = static_cast<std::size_t>(rng.uniform_int(3, static_cast<std::int64_t>(max_seq)));
    utt.word_ids.assign(max_seq, 0);
    utt.char_ids.assign(max_seq * max_chars, 0);
    for (std::size_t t = 0; t < utt.valid_len; ++t) {
        utt.word_ids[t] =
            static_cast<std::int32_t>(rng.uniform_int(3, static_cast<std::int64_t>(vocab) - 1));
        const auto chars = static_cast<std::size_t>(
            rng.uniform_int(1, static_cast<std::int64_t>(max_chars)));
        for (std::size_t c = 0; c < chars; ++c) {
            utt.char_ids[t * max_chars + c] = static_cast<std::int32_t>(
                rng.uniform_int(2, static_cast<std::int64_t>(cvocab) - 1));
        }
    }
    return utt;
}

std::vector<EncodedDialogue> random_corpus(Rng& rng, std::size_t dialogues,
                                           const erc::ModelConfig& config) {
    std::vector<EncodedDialogue> out;
    out.reserve(dialogues);
    for (std::size_t d = 0; d < dialogues; ++d) {
        EncodedDialogue dlg;
        const auto utts = static_cast<std::size_t>(rng.uniform_int(2, 5));
        for (std::size_t u = 0; u < utts; ++u) {
            dlg.utterances.push_back(random_utterance(rng, config.max_seq_len,
                                                      config.max_char_len, config.vocab_size,
                                                      config.char_vocab_size));
            dlg.labels.push_back(static_cast<int>(
                rng.uniform_int(0, static_cast<std::int64_t>(config.label_count) - 1)));
        }
        out.push_back(std::move(dlg));
    }
    return out;
}

bool params_equal(const erc::ErcParams& a, const erc::ErcParams& b) {
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i]->data.size() != tb[i]->data.size()) return false;
        if (std::memcmp(ta[i]->data.data(), tb[i]->data.data(),
                        ta[i]->data.size() * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-24s %10.1f ms %10.1f ms   %5.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, equal ? "bitwise-equal" : "MISMATCH");
}

void bench_batch_gradients(int threads) {
    erc::ModelConfig config;
    config.vocab_size = 2000;
    config.label_count = 7;
    config.max_seq_len = 60;
    config.max_char_len = 10;
    config.hyper.word_emb_dim = 48;
    config.hyper.char_emb_dim = 16;
    config.hyper.char_lstm_hidden = 20;
    config.hyper.bilstm_hidden = 48;
    config.attention_dim = 48;

    Rng rng(7);
    const erc::ErcParams params = erc::init_params(config, rng);
    const auto corpus = random_corpus(rng, 32, config);
    std::vector<const EncodedDialogue*> batch;
    std::vector<std::uint64_t> ids;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        batch.push_back(&corpus[i]);
        ids.push_back(i);
    }
    const std::vector<double> weights(config.label_count, 1.0);

    erc::ErcParams grads_serial = erc::ErcParams::zeros(config);
    auto t0 = std::chrono::steady_clock::now();
    erc::accumulate_batch_serial(params, config, batch, ids, weights, 11, 1, 8, grads_serial);
    const double serial_ms = ms_since(t0);

    erc::ErcParams grads_parallel = erc::ErcParams::zeros(config);
    t0 = std::chrono::steady_clock::now();
    erc::accumulate_batch_parallel(params, config, batch, ids, weights, 11, 1, 8, threads,
                                   grads_parallel);
    const double parallel_ms = ms_since(t0);

    report("batch gradients", serial_ms, parallel_ms,
           params_equal(grads_serial, grads_parallel));
}

void bench_kmeans_assign(int threads) {
    Rng rng(13);
    const std::size_t n = 200000, dim = 8, k = 4;
    std::vector<std::vector<double>> points(n, std::vector<double>(dim));
    for (auto& p : points) {
        for (double& v : p) v = rng.uniform(0.0, 1.0);
    }
    std::vector<std::vector<double>> centroids(k, std::vector<double>(dim));
    for (auto& c : centroids) {
        for (double& v : c) v = rng.uniform(0.0, 1.0);
    }

    std::vector<int> serial_assign, parallel_assign;
    auto t0 = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 20; ++rep) {
        mood::assign_points_serial(points, centroids, serial_assign);
    }
    const double serial_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 20; ++rep) {
        mood::assign_points_parallel(points, centroids, parallel_assign, threads);
    }
    const double parallel_ms = ms_since(t0);

    report("k-means assignment", serial_ms, parallel_ms, serial_assign == parallel_assign);
}

void bench_ga_wave(int threads) {
    // a real training evaluator at toy scale, so the wave has work to spread
    erc::ModelConfig base;
    base.vocab_size = 200;
    base.label_count = 4;
    base.max_seq_len = 12;
    base.max_char_len = 6;
    base.learning_rate = 1e-3;

    Rng rng(23);
    auto corpus = random_corpus(rng, 12, base);

    auto specs = ga::default_gene_specs();
    for (auto& spec : specs) {  // shrink dimension ranges to keep training light
        if (spec.name == "epochs") { spec.min = 2; spec.max = 3; }
        if (spec.name == "word_emb_dim") { spec.min = 8; spec.max = 16; }
        if (spec.name == "char_emb_dim") { spec.min = 4; spec.max = 8; }
        if (spec.name == "char_lstm_hidden") { spec.min = 4; spec.max = 8; }
        if (spec.name == "bilstm_hidden") { spec.min = 8; spec.max = 16; }
        if (spec.name == "batch_size") { spec.min = 4; spec.max = 8; }
    }
    erc::TrainOptions options;
    options.metric = erc::MetricKind::Accuracy;
    options.patience = 100;
    ga::TrainingEvaluator evaluator(&corpus, &corpus, base, specs, options, 99);

    ga::GaConfig config;
    config.population_size = 8;
    config.seed = 5;
    Rng init_rng(config.seed);
    const ga::Population population = ga::init_population(specs, config, init_rng);

    ga::FitnessCache serial_cache(&specs, &base, &evaluator);
    auto t0 = std::chrono::steady_clock::now();
    const auto serial_records = serial_cache.evaluate_wave_serial(population, 1);
    const double serial_ms = ms_since(t0);

    ga::FitnessCache parallel_cache(&specs, &base, &evaluator);
    t0 = std::chrono::steady_clock::now();
    const auto parallel_records = parallel_cache.evaluate_wave_parallel(population, 1, threads);
    const double parallel_ms = ms_since(t0);

    bool equal = serial_records.size() == parallel_records.size();
    for (std::size_t i = 0; equal && i < serial_records.size(); ++i) {
        equal = serial_records[i].fitness == parallel_records[i].fitness &&
                serial_records[i].accuracy == parallel_records[i].accuracy;
    }
    report("GA fitness wave", serial_ms, parallel_ms, equal);
}

}  // namespace

int main(int argc, char** argv) {
    int threads = hardware_threads();
    if (argc > 1) threads = std::atoi(argv[1]);
    std::printf("threads: %d (serial column always runs single-threaded)\n\n", threads);
    std::printf("%-24s %13s %13s %8s   %s\n", "kernel", "serial", "openmp", "speedup",
                "agreement");
    bench_batch_gradients(threads);
    bench_kmeans_assign(threads);
    bench_ga_wave(threads);
    return 0;
}
