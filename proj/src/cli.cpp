#include "leapmood/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "leapmood/common.hpp"
#include "leapmood/eval.hpp"
#include "leapmood/mood.hpp"
#include "leapmood/textprep.hpp"

namespace leapmood::cli {

namespace {

nlohmann::json parse_json(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config " + origin + ": " + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
    if (!out) throw InputError("failed writing file: " + path);
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
    return from_json_text(read_file(path), path);
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    const nlohmann::json j = parse_json(text, origin);
    RunConfig c;

    if (!j.contains("seed")) {
        throw InputError("config " + origin + ": 'seed' is mandatory (no wall-clock defaults)");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    c.out_dir = j.value("out_dir", c.out_dir);

    if (j.contains("labels")) {
        const auto& lj = j.at("labels");
        c.labels.names = lj.at("names").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < c.labels.names.size(); ++i) {
            for (std::size_t k = i + 1; k < c.labels.names.size(); ++k) {
                if (c.labels.names[i] == c.labels.names[k]) {
                    throw InputError("config: duplicate label name '" + c.labels.names[i] + "'");
                }
            }
        }
        for (const auto& name : lj.value("excluded", std::vector<std::string>{})) {
            const int id = c.labels.id_of(name);
            if (id < 0) throw InputError("config: excluded label '" + name + "' not in names");
            c.labels.excluded_for_averaging.push_back(id);
        }
    } else {
        c.labels = LabelSet::dailydialog();
    }

    if (j.contains("data")) {
        const auto& dj = j.at("data");
        c.data_format = dj.value("format", std::string{});
        c.data_text_path = dj.value("text", std::string{});
        c.data_labels_path = dj.value("labels", std::string{});
        c.data_csv_path = dj.value("csv", std::string{});
        c.data_window_minutes = dj.value("window_minutes", c.data_window_minutes);
        c.val_fraction = dj.value("val_fraction", c.val_fraction);
        c.test_fraction = dj.value("test_fraction", c.test_fraction);
        c.eval_split = dj.value("eval_split", c.eval_split);
    }

    if (j.contains("preprocess")) {
        const auto& pj = j.at("preprocess");
        c.vocab_size = pj.value("vocab_size", c.vocab_size);
        c.max_seq_len = pj.value("max_seq_len", c.max_seq_len);
        c.max_char_len = pj.value("max_char_len", c.max_char_len);
        c.acronyms_path = pj.value("acronyms", std::string{});
    }

    if (j.contains("model")) {
        const auto& mj = j.at("model");
        c.hyper.batch_size = mj.value("batch_size", c.hyper.batch_size);
        c.hyper.epochs = mj.value("epochs", c.hyper.epochs);
        c.hyper.word_emb_dim = mj.value("word_emb_dim", c.hyper.word_emb_dim);
        c.hyper.char_emb_dim = mj.value("char_emb_dim", c.hyper.char_emb_dim);
        c.hyper.char_lstm_hidden = mj.value("char_lstm_hidden", c.hyper.char_lstm_hidden);
        c.hyper.spatial_dropout = mj.value("spatial_dropout", c.hyper.spatial_dropout);
        c.hyper.lstm_dropout = mj.value("lstm_dropout", c.hyper.lstm_dropout);
        c.hyper.lstm_recurrent_dropout =
            mj.value("lstm_recurrent_dropout", c.hyper.lstm_recurrent_dropout);
        c.hyper.bilstm_hidden = mj.value("bilstm_hidden", c.hyper.bilstm_hidden);
        c.hyper.bilstm_recurrent_dropout =
            mj.value("bilstm_recurrent_dropout", c.hyper.bilstm_recurrent_dropout);
        c.learning_rate = mj.value("learning_rate", c.learning_rate);
        c.crf_loss_weight = mj.value("crf_loss_weight", c.crf_loss_weight);
        c.patience = mj.value("patience", c.patience);
        c.metric = mj.value("metric", c.metric);
    }

    c.genes = ga::default_gene_specs();
    if (j.contains("ga")) {
        const auto& gj = j.at("ga");
        c.ga_config.population_size = gj.value("population_size", c.ga_config.population_size);
        c.ga_config.crossover_rate = gj.value("crossover_rate", c.ga_config.crossover_rate);
        c.ga_config.mutation_rate = gj.value("mutation_rate", c.ga_config.mutation_rate);
        c.ga_config.max_generations = gj.value("max_generations", c.ga_config.max_generations);
        c.ga_config.elitism_count = gj.value("elitism_count", c.ga_config.elitism_count);
        c.ga_evaluator = gj.value("evaluator", c.ga_evaluator);
        c.ga_metric = gj.value("metric", c.ga_metric);
        if (gj.contains("genes")) {
            c.genes.clear();
            for (const auto& spec : gj.at("genes")) {
                ga::GeneSpec g;
                g.name = spec.at("name").get<std::string>();
                const std::string kind = spec.at("kind").get<std::string>();
                if (kind == "discrete") g.kind = ga::GeneKind::Discrete;
                else if (kind == "continuous") g.kind = ga::GeneKind::Continuous;
                else throw InputError("config: gene kind must be discrete or continuous");
                g.min = spec.at("min").get<double>();
                g.max = spec.at("max").get<double>();
                g.owner = spec.value("owner", std::string{});
                if (g.min >= g.max) throw InputError("config: gene '" + g.name + "' min >= max");
                c.genes.push_back(std::move(g));
            }
        }
        if (gj.contains("surrogate_target")) {
            c.surrogate_target = gj.at("surrogate_target").get<std::vector<double>>();
        }
    }
    c.ga_config.seed = c.seed;

    if (j.contains("mood")) {
        const auto& mj = j.at("mood");
        c.mood_window_minutes = mj.value("window_minutes", c.mood_window_minutes);
        c.kmeans_k = mj.value("k", c.kmeans_k);
        c.mood_fit_csv = mj.value("fit_csv", std::string{});
        if (mj.contains("polarity")) {
            for (auto it = mj.at("polarity").begin(); it != mj.at("polarity").end(); ++it) {
                c.polarity_by_name[it.key()] = it.value().get<int>();
            }
        }
    }

    c.threads = j.value("threads", c.threads);
    return c;
}

std::map<int, int> RunConfig::polarity_by_id() const {
    std::map<int, int> polarity;
    if (!polarity_by_name.empty()) {
        for (const auto& [name, sign] : polarity_by_name) {
            const int id = labels.id_of(name);
            if (id < 0) throw InputError("config: polarity label '" + name + "' not in names");
            polarity[id] = sign;
        }
        // unnamed labels default to neutral so the map always covers the set
        for (std::size_t id = 0; id < labels.size(); ++id) {
            polarity.emplace(static_cast<int>(id), 0);
        }
        return polarity;
    }
    static const std::vector<std::string> positive = {"happy", "happiness", "surprise", "love",
                                                      "joy"};
    static const std::vector<std::string> negative = {"anger",   "angry", "disgust",
                                                      "fear",    "sad",   "sadness",
                                                      "sarcasm", "worry"};
    for (std::size_t id = 0; id < labels.size(); ++id) {
        const std::string& name = labels.names[id];
        int sign = 0;
        if (std::find(positive.begin(), positive.end(), name) != positive.end()) sign = 1;
        if (std::find(negative.begin(), negative.end(), name) != negative.end()) sign = -1;
        polarity[static_cast<int>(id)] = sign;
    }
    return polarity;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

namespace {

struct RawDialogue {
    std::vector<std::string> texts;
    std::vector<int> labels;
};

std::vector<RawDialogue> load_raw_dialogues(const RunConfig& config, bool require_labels) {
    std::vector<RawDialogue> raw;
    if (config.data_format == "dailydialog") {
        if (config.data_text_path.empty()) throw InputError("config: data.text is required");
        if (config.data_labels_path.empty()) {
            if (require_labels) throw InputError("config: data.labels is required");
            std::ifstream in(config.data_text_path);
            if (!in) throw InputError("cannot open dialogue text file: " + config.data_text_path);
            std::string line;
            while (std::getline(in, line)) {
                RawDialogue dlg;
                dlg.texts = split_dailydialog_line(line);
                if (!dlg.texts.empty()) raw.push_back(std::move(dlg));
            }
        } else {
            for (auto& dlg : load_dailydialog(config.data_text_path, config.data_labels_path,
                                              config.labels)) {
                raw.push_back({std::move(dlg.utterances), std::move(dlg.labels)});
            }
        }
    } else if (config.data_format == "chat_csv") {
        if (config.data_csv_path.empty()) throw InputError("config: data.csv is required");
        const auto messages = load_chat_csv(config.data_csv_path, config.labels);
        for (const auto& group : group_by_window(messages, config.data_window_minutes)) {
            RawDialogue dlg;
            for (const auto& msg : group.messages) {
                dlg.texts.push_back(msg.text);
                if (msg.emotion_label) {
                    dlg.labels.push_back(*msg.emotion_label);
                } else if (require_labels) {
                    throw InputError("chat message at timestamp " +
                                     std::to_string(msg.timestamp) + " has no emotion label");
                }
            }
            if (!dlg.labels.empty() && dlg.labels.size() != dlg.texts.size()) {
                throw InputError("chat group at timestamp " +
                                 std::to_string(group.window_start) + " is partially labeled");
            }
            raw.push_back(std::move(dlg));
        }
    } else {
        throw InputError("config: data.format must be 'dailydialog' or 'chat_csv', got '" +
                         config.data_format + "'");
    }
    if (require_labels) {
        for (const auto& dlg : raw) {
            for (int lab : dlg.labels) {
                if (lab < 0 || static_cast<std::size_t>(lab) >= config.labels.size()) {
                    throw InputError("label id out of range: " + std::to_string(lab));
                }
            }
        }
    }
    return raw;
}

AcronymMap load_acronyms(const RunConfig& config) {
    if (config.acronyms_path.empty()) return AcronymMap{};
    return AcronymMap::load_json(config.acronyms_path);
}

std::vector<std::string> preprocess_tokens(const std::string& raw, const AcronymMap& acronyms) {
    return tokenize(expand_acronyms(clean_text(raw), acronyms));
}

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

SplitIndices split_dialogues(std::size_t n, const RunConfig& config) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(config.seed, /*tag=*/1, 0);
    for (std::size_t i = n; i > 1; --i) {
        const auto j =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
    }
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * config.test_fraction));
    const auto n_val = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * config.val_fraction));
    if (n_test + n_val >= n) {
        throw InputError("split fractions leave no training dialogues");
    }
    SplitIndices split;
    split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                     order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
    return split;
}

EncodedCorpus encode_split(const std::vector<RawDialogue>& raw,
                           const std::vector<std::size_t>& indices, const RunConfig& config,
                           const Vocab& vocab, const CharVocab& cvocab,
                           const AcronymMap& acronyms, OovStats* stats) {
    EncodedCorpus corpus;
    corpus.label_names = config.labels.names;
    corpus.excluded_labels = config.labels.excluded_for_averaging;
    corpus.max_seq_len = config.max_seq_len;
    corpus.max_char_len = config.max_char_len;
    corpus.vocab_fingerprint = vocab.fingerprint();
    for (std::size_t idx : indices) {
        EncodedDialogue dlg;
        dlg.labels = raw[idx].labels;
        for (const auto& text : raw[idx].texts) {
            dlg.utterances.push_back(encode_text(text, acronyms, vocab, cvocab,
                                                 config.max_seq_len, config.max_char_len, stats));
        }
        corpus.dialogues.push_back(std::move(dlg));
    }
    return corpus;
}

erc::TrainOptions train_options(const RunConfig& config, const std::string& metric_name) {
    erc::TrainOptions options;
    if (metric_name == "accuracy") {
        options.metric = erc::MetricKind::Accuracy;
    } else if (metric_name == "micro_f1_excluding") {
        options.metric = erc::MetricKind::MicroF1Excluding;
        options.excluded_labels = config.labels.excluded_for_averaging;
    } else {
        throw InputError("config: metric must be 'accuracy' or 'micro_f1_excluding', got '" +
                         metric_name + "'");
    }
    options.patience = config.patience;
    options.threads = config.threads;
    return options;
}

erc::ModelConfig base_model_config(const RunConfig& config, std::size_t vocab_total) {
    erc::ModelConfig model_config;
    model_config.hyper = config.hyper;
    model_config.vocab_size = vocab_total;
    model_config.char_vocab_size = CharVocab{}.size();
    model_config.max_seq_len = config.max_seq_len;
    model_config.max_char_len = config.max_char_len;
    model_config.label_count = config.labels.size();
    model_config.learning_rate = config.learning_rate;
    model_config.attention_dim = static_cast<std::size_t>(config.hyper.bilstm_hidden);
    model_config.crf_loss_weight = config.crf_loss_weight;
    return model_config;
}

void check_vocab_match(std::uint64_t expected, std::uint64_t actual, const std::string& what) {
    if (expected != actual) {
        throw InputError(what + " was produced with a different vocabulary (fingerprint " +
                         hex64(actual) + ", expected " + hex64(expected) +
                         "); re-run preprocess");
    }
}

void check_label_count(const erc::TrainedModel& model, const RunConfig& config) {
    if (model.config.label_count != config.labels.size()) {
        throw InputError("model was trained with " + std::to_string(model.config.label_count) +
                         " labels but the config names " + std::to_string(config.labels.size()));
    }
}

std::string format_double(double v) {
    std::ostringstream out;
    out.setf(std::ios::fmtflags(0), std::ios::floatfield);
    out.precision(12);
    out << v;
    return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

void run_preprocess(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const std::vector<RawDialogue> raw = load_raw_dialogues(config, /*require_labels=*/true);
    if (raw.empty()) throw InputError("preprocess: input corpus is empty");

    const SplitIndices split = split_dialogues(raw.size(), config);
    const AcronymMap acronyms = load_acronyms(config);

    std::vector<std::vector<std::string>> train_streams;
    for (std::size_t idx : split.train) {
        for (const auto& text : raw[idx].texts) {
            train_streams.push_back(preprocess_tokens(text, acronyms));
        }
    }
    const Vocab vocab = build_vocab(train_streams, config.vocab_size);
    const CharVocab cvocab;
    vocab.save(config.vocab_path());

    OovStats stats;
    const EncodedCorpus train_corpus =
        encode_split(raw, split.train, config, vocab, cvocab, acronyms, &stats);
    const EncodedCorpus val_corpus =
        encode_split(raw, split.val, config, vocab, cvocab, acronyms, &stats);
    const EncodedCorpus test_corpus =
        encode_split(raw, split.test, config, vocab, cvocab, acronyms, &stats);
    save_encoded_corpus(train_corpus, config.corpus_path("train"));
    save_encoded_corpus(val_corpus, config.corpus_path("val"));
    save_encoded_corpus(test_corpus, config.corpus_path("test"));

    std::uint64_t utterances = 0;
    std::vector<std::uint64_t> histogram(config.labels.size(), 0);
    for (const auto& dlg : raw) {
        utterances += dlg.texts.size();
        for (int lab : dlg.labels) ++histogram[static_cast<std::size_t>(lab)];
    }

    std::ostringstream out;
    out << "metric,value\n";
    out << "dialogues," << raw.size() << "\n";
    out << "utterances," << utterances << "\n";
    out << "tokens," << stats.total_tokens << "\n";
    out << "vocab_words," << vocab.words().size() << "\n";
    out << "oov_before," << stats.oov_before << "\n";
    out << "oov_after," << stats.oov_after << "\n";
    const double denom = stats.total_tokens ? static_cast<double>(stats.total_tokens) : 1.0;
    out << "oov_before_rate," << format_double(static_cast<double>(stats.oov_before) / denom)
        << "\n";
    out << "oov_after_rate," << format_double(static_cast<double>(stats.oov_after) / denom)
        << "\n";
    out << "split_train," << split.train.size() << "\n";
    out << "split_val," << split.val.size() << "\n";
    out << "split_test," << split.test.size() << "\n";
    for (std::size_t id = 0; id < histogram.size(); ++id) {
        out << "label_" << config.labels.names[id] << "," << histogram[id] << "\n";
    }
    write_file(config.stats_path(), out.str());

    std::cout << "preprocess: " << raw.size() << " dialogues, vocab " << vocab.words().size()
              << " words, OOV " << stats.oov_before << " -> " << stats.oov_after
              << " after phonetic recovery\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void run_train(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const Vocab vocab = Vocab::load(config.vocab_path());
    EncodedCorpus train_corpus = load_encoded_corpus(config.corpus_path("train"));
    EncodedCorpus val_corpus = load_encoded_corpus(config.corpus_path("val"));
    check_vocab_match(vocab.fingerprint(), train_corpus.vocab_fingerprint, "training corpus");
    check_vocab_match(vocab.fingerprint(), val_corpus.vocab_fingerprint, "validation corpus");
    if (train_corpus.dialogues.empty()) throw InputError("train: training corpus is empty");
    if (val_corpus.dialogues.empty()) val_corpus.dialogues = train_corpus.dialogues;

    erc::ModelConfig model_config = base_model_config(config, vocab.total_size());
    model_config.max_seq_len = train_corpus.max_seq_len;
    model_config.max_char_len = train_corpus.max_char_len;
    model_config.validate();

    const erc::TrainOptions options = train_options(config, config.metric);
    Rng rng = Rng::stream(config.seed, /*tag=*/2, 0);
    erc::TrainedModel model =
        erc::train(train_corpus.dialogues, val_corpus.dialogues, model_config, options, rng);
    model.vocab_fingerprint = vocab.fingerprint();
    erc::save_model(model, config.model_path());

    std::ostringstream history;
    history << "epoch,train_loss,val_metric\n";
    for (const auto& e : model.history) {
        history << e.epoch << ',' << format_double(e.train_loss) << ','
                << format_double(e.val_metric) << "\n";
    }
    write_file(config.history_path(), history.str());

    const auto counts = erc::count_params(model_config);
    std::cout << "train: " << model.history.size() << " epochs, best validation metric "
              << format_double(model.best_val_metric) << "; " << counts.total
              << " parameters (" << format_double(static_cast<double>(counts.total) * 8.0 /
                                                  (1024.0 * 1024.0))
              << " MiB at float64)\n";
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void run_eval(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const Vocab vocab = Vocab::load(config.vocab_path());
    const erc::TrainedModel model = erc::load_model(config.model_path());
    check_vocab_match(vocab.fingerprint(), model.vocab_fingerprint, "model");
    check_label_count(model, config);

    EncodedCorpus corpus = load_encoded_corpus(config.corpus_path(config.eval_split));
    check_vocab_match(vocab.fingerprint(), corpus.vocab_fingerprint, "evaluation corpus");
    if (corpus.dialogues.empty()) {
        throw InputError("eval: split '" + config.eval_split + "' is empty");
    }

    eval::ConfusionMatrix cm(config.labels.size());
    for (const auto& dlg : corpus.dialogues) {
        const erc::Prediction pred = erc::predict(model, dlg);
        cm.add(eval::confusion(dlg.labels, pred.labels, config.labels.size()));
    }
    const eval::MetricReport report =
        eval::metrics(cm, config.labels.excluded_for_averaging);
    std::cout << eval::report_table(report, config.labels.names);
    write_file(config.metrics_csv_path(), eval::report_csv(report, config.labels.names));
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

void run_predict(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const Vocab vocab = Vocab::load(config.vocab_path());
    const erc::TrainedModel model = erc::load_model(config.model_path());
    check_vocab_match(vocab.fingerprint(), model.vocab_fingerprint, "model");
    check_label_count(model, config);
    const AcronymMap acronyms = load_acronyms(config);
    const CharVocab cvocab;

    const std::vector<RawDialogue> raw = load_raw_dialogues(config, /*require_labels=*/false);
    if (raw.empty()) throw InputError("predict: input is empty");

    std::ostringstream out;
    out << "dialogue,utterance,predicted,gold";
    for (const auto& name : config.labels.names) out << ",p_" << name;
    out << "\n";

    for (std::size_t d = 0; d < raw.size(); ++d) {
        EncodedDialogue dlg;
        for (const auto& text : raw[d].texts) {
            dlg.utterances.push_back(encode_text(text, acronyms, vocab, cvocab,
                                                 model.config.max_seq_len,
                                                 model.config.max_char_len));
        }
        const erc::Prediction pred = erc::predict(model, dlg);
        for (std::size_t u = 0; u < pred.labels.size(); ++u) {
            out << d << ',' << u << ','
                << config.labels.names[static_cast<std::size_t>(pred.labels[u])] << ',';
            if (u < raw[d].labels.size()) {
                out << config.labels.names[static_cast<std::size_t>(raw[d].labels[u])];
            }
            for (double p : pred.logits[u]) out << ',' << format_double(p);
            out << "\n";
        }
    }
    write_file(config.predictions_path(), out.str());
    std::cout << "predict: wrote " << config.predictions_path() << "\n";
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

namespace {

std::string ga_history_csv(const std::vector<ga::GenerationStats>& history) {
    std::ostringstream out;
    out << "generation,best_fitness,mean_fitness,best_accuracy,best_params,chromosome_json\n";
    for (const auto& stats : history) {
        std::string genes = "[";
        for (std::size_t i = 0; i < stats.best.chromosome.size(); ++i) {
            if (i) genes += ",";
            genes += format_double(stats.best.chromosome[i]);
        }
        genes += "]";
        out << stats.generation << ',' << format_double(stats.best.fitness) << ','
            << format_double(stats.mean_fitness) << ',' << format_double(stats.best.accuracy)
            << ',' << stats.best.total_params << ',' << csv_quote(genes) << "\n";
    }
    return out.str();
}

}  // namespace

void run_tune(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);

    ga::GaConfig ga_config = config.ga_config;
    ga_config.threads = config.threads;

    std::unique_ptr<ga::Evaluator> evaluator;
    erc::ModelConfig base;
    std::vector<EncodedDialogue> train_data, val_data;

    if (config.ga_evaluator == "real") {
        const Vocab vocab = Vocab::load(config.vocab_path());
        EncodedCorpus train_corpus = load_encoded_corpus(config.corpus_path("train"));
        EncodedCorpus val_corpus = load_encoded_corpus(config.corpus_path("val"));
        check_vocab_match(vocab.fingerprint(), train_corpus.vocab_fingerprint,
                          "training corpus");
        if (train_corpus.dialogues.empty()) throw InputError("tune: training corpus is empty");
        train_data = std::move(train_corpus.dialogues);
        val_data = val_corpus.dialogues.empty() ? train_data : std::move(val_corpus.dialogues);

        base = base_model_config(config, vocab.total_size());
        base.max_seq_len = train_corpus.max_seq_len;
        base.max_char_len = train_corpus.max_char_len;

        erc::TrainOptions options = train_options(config, config.ga_metric);
        options.threads = 1;  // parallelism lives at the population level
        evaluator = std::make_unique<ga::TrainingEvaluator>(&train_data, &val_data, base,
                                                            config.genes, options, config.seed);
    } else if (config.ga_evaluator == "surrogate") {
        base = base_model_config(config, config.vocab_size + kReservedWords);
        ga::Chromosome target = config.surrogate_target;
        if (target.empty()) {
            target = {90, 25, 56, 16, 20, 0.1, 0.1, 0.1, 57, 0.1};
        }
        evaluator = std::make_unique<ga::SurrogateEvaluator>(config.genes, base, target);
    } else {
        throw InputError("config: ga.evaluator must be 'real' or 'surrogate', got '" +
                         config.ga_evaluator + "'");
    }

    ga::GaResult result;
    try {
        result = ga::run_ga(ga_config, config.genes, base, *evaluator);
    } catch (const ga::GaAborted& aborted) {
        write_file(config.ga_history_path(), ga_history_csv(aborted.history));
        throw InputError(std::string("tune aborted: ") + aborted.what() +
                         " (partial history written)");
    }

    write_file(config.ga_history_path(), ga_history_csv(result.history));

    nlohmann::json best;
    nlohmann::json genes_obj = nlohmann::json::object();
    for (std::size_t i = 0; i < config.genes.size(); ++i) {
        genes_obj[config.genes[i].name] = result.best.chromosome[i];
    }
    best["genes"] = genes_obj;
    best["accuracy"] = result.best.accuracy;
    best["total_params"] = result.best.total_params;
    best["bytes_float64"] = result.best.total_params * 8;
    best["fitness"] = result.best.fitness;
    write_file(config.best_chromosome_path(), best.dump(2) + "\n");

    const erc::ModelConfig best_config =
        ga::chromosome_to_config(result.best.chromosome, config.genes, base);
    write_file(config.best_model_config_path(), erc::config_to_json_text(best_config));

    std::cout << "tune: " << result.history.size() << " generations, best fitness "
              << format_double(result.best.fitness) << " (accuracy "
              << format_double(result.best.accuracy) << ", params " << result.best.total_params
              << ")\n";
}

// ---------------------------------------------------------------------------
// mood
// ---------------------------------------------------------------------------

void run_mood(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const Vocab vocab = Vocab::load(config.vocab_path());
    const erc::TrainedModel model = erc::load_model(config.model_path());
    check_vocab_match(vocab.fingerprint(), model.vocab_fingerprint, "model");
    check_label_count(model, config);
    const AcronymMap acronyms = load_acronyms(config);
    const CharVocab cvocab;

    mood::EncoderContext encoder;
    encoder.vocab = &vocab;
    encoder.cvocab = &cvocab;
    encoder.acronyms = &acronyms;
    encoder.max_seq_len = model.config.max_seq_len;
    encoder.max_char_len = model.config.max_char_len;

    mood::KMeansModel km;
    if (std::filesystem::exists(config.kmeans_path())) {
        km = mood::load_kmeans(config.kmeans_path());
    } else if (!config.mood_fit_csv.empty()) {
        const auto fit_messages = load_chat_csv(config.mood_fit_csv, config.labels);
        const auto fit_groups = group_by_window(fit_messages, config.mood_window_minutes);
        if (fit_groups.size() < config.kmeans_k) {
            throw InputError("mood: not enough training groups to fit k-means");
        }
        std::vector<std::vector<double>> aggregates;
        aggregates.reserve(fit_groups.size());
        for (const auto& group : fit_groups) {
            aggregates.push_back(mood::group_aggregate(group, encoder, model));
        }
        km = mood::kmeans_fit(aggregates, config.kmeans_k, config.seed, 100, 1e-6,
                              config.threads);
        km.cluster_to_mood = mood::label_clusters(km, config.polarity_by_id());
        mood::save_kmeans(km, config.polarity_by_id(), config.kmeans_path());
    } else {
        throw InputError("mood: no k-means model at " + config.kmeans_path() +
                         " and no mood.fit_csv to fit one");
    }

    if (config.data_csv_path.empty()) throw InputError("config: data.csv is required");
    const auto messages = load_chat_csv(config.data_csv_path, config.labels);
    const auto groups = group_by_window(messages, config.mood_window_minutes);

    std::ostringstream out;
    out << "group_id,window_start,message_count";
    for (const auto& name : config.labels.names) out << ",agg_" << name;
    out << ",mood\n";
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::vector<double> agg = mood::group_aggregate(groups[g], encoder, model);
        const Mood m = km.cluster_to_mood[mood::nearest_centroid(km, agg)];
        out << g << ',' << groups[g].window_start << ',' << groups[g].messages.size();
        for (double v : agg) out << ',' << format_double(v);
        out << ',' << mood_name(m) << "\n";
    }
    write_file(config.mood_csv_path(), out.str());
    std::cout << "mood: " << groups.size() << " groups -> " << config.mood_csv_path() << "\n";
}

}  // namespace leapmood::cli
