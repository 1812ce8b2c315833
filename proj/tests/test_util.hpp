// Shared fixtures: temp dirs and the synthetic corpora the training-level
// tests run on. Everything is generated from an explicit Rng seed.

#ifndef LEAPMOOD_TESTS_TEST_UTIL_HPP
#define LEAPMOOD_TESTS_TEST_UTIL_HPP

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "leapmood/corpus.hpp"
#include "leapmood/encode.hpp"
#include "leapmood/erc.hpp"
#include "leapmood/rng.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("leapmood_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string root() const { return dir_.string(); }

private:
    std::filesystem::path dir_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Synthetic emotion corpora. Each label owns a small signature vocabulary;
// utterances mix signature tokens with shared noise, so the mapping is
// learnable but not trivial.
// ---------------------------------------------------------------------------

struct SyntheticCorpus {
    std::vector<std::string> label_names;
    std::vector<leapmood::Dialogue> dialogues;  // raw text + labels
};

inline std::vector<std::string> signature_tokens(const std::string& label, int count) {
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(label + "tok" + std::string(1, static_cast<char>('a' + i)));
    }
    return out;
}

/// `signal` is the probability an emission token comes from the label's own
/// signature set rather than the shared noise pool.
inline SyntheticCorpus make_synthetic_corpus(std::size_t n_dialogues, leapmood::Rng& rng,
                                             const std::vector<std::string>& label_names,
                                             const std::vector<double>& label_probs,
                                             double signal = 0.8, int min_utts = 2,
                                             int max_utts = 6, int min_tokens = 3,
                                             int max_tokens = 8) {
    SyntheticCorpus corpus;
    corpus.label_names = label_names;

    std::vector<std::vector<std::string>> signatures;
    for (const auto& name : label_names) signatures.push_back(signature_tokens(name, 8));
    std::vector<std::string> noise;
    for (int i = 0; i < 60; ++i) noise.push_back("filler" + std::to_string(i));

    auto sample_label = [&]() {
        const double r = rng.next_double();
        double cum = 0.0;
        for (std::size_t c = 0; c < label_probs.size(); ++c) {
            cum += label_probs[c];
            if (r < cum) return static_cast<int>(c);
        }
        return static_cast<int>(label_probs.size()) - 1;
    };

    for (std::size_t d = 0; d < n_dialogues; ++d) {
        leapmood::Dialogue dlg;
        const auto utts = static_cast<int>(rng.uniform_int(min_utts, max_utts));
        int label = sample_label();
        for (int u = 0; u < utts; ++u) {
            // sticky labels give the CRF transitions something to model
            if (u > 0 && rng.next_double() > 0.5) label = sample_label();
            const auto tokens = static_cast<int>(rng.uniform_int(min_tokens, max_tokens));
            std::string text;
            for (int t = 0; t < tokens; ++t) {
                if (t) text += ' ';
                if (rng.next_double() < signal) {
                    const auto& sig = signatures[static_cast<std::size_t>(label)];
                    text += sig[static_cast<std::size_t>(
                        rng.uniform_int(0, static_cast<std::int64_t>(sig.size()) - 1))];
                } else {
                    text += noise[static_cast<std::size_t>(
                        rng.uniform_int(0, static_cast<std::int64_t>(noise.size()) - 1))];
                }
            }
            dlg.utterances.push_back(text);
            dlg.labels.push_back(label);
        }
        corpus.dialogues.push_back(std::move(dlg));
    }
    return corpus;
}

/// DailyDialog-format files for a synthetic corpus.
inline void write_dailydialog_files(const SyntheticCorpus& corpus, const std::string& text_path,
                                    const std::string& labels_path) {
    std::ofstream text(text_path, std::ios::binary);
    std::ofstream labels(labels_path, std::ios::binary);
    for (const auto& dlg : corpus.dialogues) {
        for (std::size_t u = 0; u < dlg.utterances.size(); ++u) {
            text << dlg.utterances[u] << " __eou__ ";
            labels << dlg.labels[u];
            if (u + 1 < dlg.labels.size()) labels << ' ';
        }
        text << '\n';
        labels << '\n';
    }
}

/// Encode raw dialogues with a vocab built from them (no acronyms).
struct EncodedFixture {
    leapmood::Vocab vocab;
    leapmood::CharVocab cvocab;
    std::vector<leapmood::EncodedDialogue> dialogues;
};

inline EncodedFixture encode_corpus(const SyntheticCorpus& corpus, std::size_t vocab_size,
                                    std::size_t max_seq_len, std::size_t max_char_len) {
    EncodedFixture fixture;
    std::vector<std::vector<std::string>> streams;
    for (const auto& dlg : corpus.dialogues) {
        for (const auto& text : dlg.utterances) {
            streams.push_back(leapmood::tokenize(leapmood::clean_text(text)));
        }
    }
    fixture.vocab = leapmood::build_vocab(streams, vocab_size);
    leapmood::AcronymMap no_acronyms;
    for (const auto& dlg : corpus.dialogues) {
        leapmood::EncodedDialogue enc;
        enc.labels = dlg.labels;
        for (const auto& text : dlg.utterances) {
            enc.utterances.push_back(leapmood::encode_text(text, no_acronyms, fixture.vocab,
                                                           fixture.cvocab, max_seq_len,
                                                           max_char_len));
        }
        fixture.dialogues.push_back(std::move(enc));
    }
    return fixture;
}

/// Planted-polarity chat: groups are all-positive or all-negative; message
/// texts reuse the synthetic signature vocabulary. Groups are spaced more
/// than one window apart so group_by_window reproduces the plant exactly.
struct PlantedChat {
    std::vector<leapmood::ChatMessage> messages;
    std::vector<leapmood::Mood> group_moods;  // plant truth per group, in order
};

inline PlantedChat make_planted_chat(std::size_t n_groups, leapmood::Rng& rng,
                                     const std::vector<std::string>& label_names,
                                     const std::vector<int>& positive_labels,
                                     const std::vector<int>& negative_labels,
                                     double signal = 0.85) {
    PlantedChat chat;
    std::vector<std::vector<std::string>> signatures;
    for (const auto& name : label_names) signatures.push_back(signature_tokens(name, 8));
    std::vector<std::string> noise;
    for (int i = 0; i < 60; ++i) noise.push_back("filler" + std::to_string(i));

    std::int64_t base_ts = 1600000000;
    for (std::size_t g = 0; g < n_groups; ++g) {
        const bool good = (g % 2 == 0);
        chat.group_moods.push_back(good ? leapmood::Mood::Good : leapmood::Mood::Bad);
        const auto& pool = good ? positive_labels : negative_labels;
        const auto n_msgs = static_cast<int>(rng.uniform_int(3, 6));
        for (int m = 0; m < n_msgs; ++m) {
            leapmood::ChatMessage msg;
            msg.timestamp = base_ts + m * 240;  // well inside one 60-minute window
            const int label = pool[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
            msg.emotion_label = label;
            msg.group_id = static_cast<int>(g);
            const auto tokens = static_cast<int>(rng.uniform_int(3, 7));
            std::string text;
            for (int t = 0; t < tokens; ++t) {
                if (t) text += ' ';
                if (rng.next_double() < signal) {
                    const auto& sig = signatures[static_cast<std::size_t>(label)];
                    text += sig[static_cast<std::size_t>(
                        rng.uniform_int(0, static_cast<std::int64_t>(sig.size()) - 1))];
                } else {
                    text += noise[static_cast<std::size_t>(
                        rng.uniform_int(0, static_cast<std::int64_t>(noise.size()) - 1))];
                }
            }
            msg.text = text;
            chat.messages.push_back(std::move(msg));
        }
        base_ts += 2 * 3600;  // next group starts two windows later
    }
    return chat;
}

inline void write_chat_csv_file(const PlantedChat& chat,
                                const std::vector<std::string>& label_names,
                                const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << "timestamp,text,emotion,group\n";
    for (const auto& msg : chat.messages) {
        out << msg.timestamp << ',' << msg.text << ',';
        if (msg.emotion_label) out << label_names[static_cast<std::size_t>(*msg.emotion_label)];
        out << ',';
        if (msg.group_id) out << *msg.group_id;
        out << '\n';
    }
}

}  // namespace testutil

#endif
