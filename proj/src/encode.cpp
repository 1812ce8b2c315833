#include "leapmood/encode.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "leapmood/common.hpp"
#include "leapmood/soundex.hpp"

namespace leapmood {

EncodedUtterance encode_utterance(const std::vector<std::string>& tokens, const Vocab& vocab,
                                  const CharVocab& cvocab, std::size_t max_seq_len,
                                  std::size_t max_char_len) {
    EncodedUtterance enc;
    enc.max_seq_len = max_seq_len;
    enc.max_char_len = max_char_len;
    enc.valid_len = std::min(tokens.size(), max_seq_len);
    enc.word_ids.assign(max_seq_len, kPadId);
    enc.char_ids.assign(max_seq_len * max_char_len, kPadId);

    for (std::size_t i = 0; i < enc.valid_len; ++i) {
        const std::string& tok = tokens[i];
        int id = vocab.id_of(tok);
        if (id < 0) {
            id = vocab.phonetic_match(soundex(tok));
            if (id < 0) id = kUnkId;
        }
        enc.word_ids[i] = id;
        const std::size_t n = std::min(tok.size(), max_char_len);
        for (std::size_t c = 0; c < n; ++c) {
            enc.char_ids[i * max_char_len + c] = cvocab.id_of(tok[c]);
        }
    }
    return enc;
}

EncodedUtterance encode_text(const std::string& raw, const AcronymMap& acronyms,
                             const Vocab& vocab, const CharVocab& cvocab,
                             std::size_t max_seq_len, std::size_t max_char_len,
                             OovStats* stats) {
    const std::vector<std::string> tokens =
        tokenize(expand_acronyms(clean_text(raw), acronyms));
    if (stats) {
        for (const auto& tok : tokens) {
            ++stats->total_tokens;
            if (vocab.id_of(tok) < 0) {
                ++stats->oov_before;
                if (vocab.phonetic_match(soundex(tok)) < 0) ++stats->oov_after;
            }
        }
    }
    return encode_utterance(tokens, vocab, cvocab, max_seq_len, max_char_len);
}

namespace {

constexpr char kCorpusMagic[8] = {'L', 'P', 'M', 'C', 'O', 'R', 'P', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw InputError("truncated corpus file while reading " + what);
    return v;
}

}  // namespace

void save_encoded_corpus(const EncodedCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write corpus file: " + path);

    nlohmann::json header;
    header["label_names"] = corpus.label_names;
    header["excluded_labels"] = corpus.excluded_labels;
    header["max_seq_len"] = corpus.max_seq_len;
    header["max_char_len"] = corpus.max_char_len;
    header["vocab_fingerprint"] = hex64(corpus.vocab_fingerprint);
    header["dialogue_count"] = corpus.dialogues.size();
    const std::string header_text = header.dump();

    out.write(kCorpusMagic, sizeof(kCorpusMagic));
    write_raw<std::uint64_t>(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    for (const auto& dlg : corpus.dialogues) {
        write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(dlg.utterances.size()));
        write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(dlg.labels.size()));
        for (int lab : dlg.labels) write_raw<std::int32_t>(out, lab);
        for (const auto& utt : dlg.utterances) {
            write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(utt.valid_len));
            for (std::int32_t id : utt.word_ids) write_raw<std::int32_t>(out, id);
            for (std::int32_t id : utt.char_ids) {
                write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(id));
            }
        }
    }
    if (!out) throw InputError("failed writing corpus file: " + path);
}

EncodedCorpus load_encoded_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open corpus file: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCorpusMagic, sizeof(magic)) != 0) {
        throw InputError("not an encoded corpus file: " + path);
    }
    const auto header_len = read_raw<std::uint64_t>(in, "header length");
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw InputError("truncated corpus header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("corrupt corpus header: " + std::string(e.what()));
    }

    EncodedCorpus corpus;
    corpus.label_names = header.at("label_names").get<std::vector<std::string>>();
    corpus.excluded_labels = header.at("excluded_labels").get<std::vector<int>>();
    corpus.max_seq_len = header.at("max_seq_len").get<std::size_t>();
    corpus.max_char_len = header.at("max_char_len").get<std::size_t>();
    corpus.vocab_fingerprint =
        std::stoull(header.at("vocab_fingerprint").get<std::string>(), nullptr, 16);
    const auto n_dialogues = header.at("dialogue_count").get<std::uint64_t>();

    corpus.dialogues.reserve(n_dialogues);
    for (std::uint64_t d = 0; d < n_dialogues; ++d) {
        EncodedDialogue dlg;
        const auto n_utts = read_raw<std::uint32_t>(in, "utterance count");
        const auto n_labels = read_raw<std::uint32_t>(in, "label count");
        dlg.labels.resize(n_labels);
        for (auto& lab : dlg.labels) lab = read_raw<std::int32_t>(in, "label");
        dlg.utterances.resize(n_utts);
        for (auto& utt : dlg.utterances) {
            utt.max_seq_len = corpus.max_seq_len;
            utt.max_char_len = corpus.max_char_len;
            utt.valid_len = read_raw<std::uint32_t>(in, "valid length");
            if (utt.valid_len > corpus.max_seq_len) {
                throw InputError("corrupt corpus file: valid_len exceeds max_seq_len");
            }
            utt.word_ids.resize(corpus.max_seq_len);
            for (auto& id : utt.word_ids) id = read_raw<std::int32_t>(in, "word id");
            utt.char_ids.resize(corpus.max_seq_len * corpus.max_char_len);
            for (auto& id : utt.char_ids) id = read_raw<std::uint8_t>(in, "char id");
        }
        corpus.dialogues.push_back(std::move(dlg));
    }
    return corpus;
}

}  // namespace leapmood
