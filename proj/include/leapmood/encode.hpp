#ifndef LEAPMOOD_ENCODE_HPP
#define LEAPMOOD_ENCODE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "leapmood/textprep.hpp"
#include "leapmood/vocab.hpp"

namespace leapmood {

/// Padded word-id sequence plus per-token char-id grid for one utterance.
/// word_ids has length max_seq_len; char_ids is max_seq_len x max_char_len,
/// row-major. Positions >= valid_len are PAD.
struct EncodedUtterance {
    std::vector<std::int32_t> word_ids;
    std::vector<std::int32_t> char_ids;
    std::size_t max_seq_len = 0;
    std::size_t max_char_len = 0;
    std::size_t valid_len = 0;

    std::int32_t char_at(std::size_t token, std::size_t pos) const {
        return char_ids[token * max_char_len + pos];
    }
};

/// Ordered utterances sharing one gold label sequence (a conversation).
struct EncodedDialogue {
    std::vector<EncodedUtterance> utterances;
    std::vector<int> labels;  // empty for unlabeled inference input
};

/// Word path: in-vocab id, else the most frequent vocab token with the same
/// Soundex code, else UNK. Char ids always spell the ORIGINAL surface token
/// (the misspelling signal is what the char channel is for). Truncation
/// keeps the head of the sequence.
EncodedUtterance encode_utterance(const std::vector<std::string>& tokens, const Vocab& vocab,
                                  const CharVocab& cvocab, std::size_t max_seq_len,
                                  std::size_t max_char_len);

/// Counters for the preprocessing stats report.
struct OovStats {
    std::uint64_t total_tokens = 0;
    std::uint64_t oov_before = 0;  // tokens absent from the vocab
    std::uint64_t oov_after = 0;   // still UNK after phonetic recovery
};

/// clean -> expand acronyms -> tokenize -> encode, for one raw utterance.
EncodedUtterance encode_text(const std::string& raw, const AcronymMap& acronyms,
                             const Vocab& vocab, const CharVocab& cvocab,
                             std::size_t max_seq_len, std::size_t max_char_len,
                             OovStats* stats = nullptr);

/// Versioned binary container for an encoded corpus: JSON header (label
/// names, shape, vocab fingerprint) followed by fixed-width id payloads.
struct EncodedCorpus {
    std::vector<std::string> label_names;
    std::vector<int> excluded_labels;
    std::size_t max_seq_len = 0;
    std::size_t max_char_len = 0;
    std::uint64_t vocab_fingerprint = 0;
    std::vector<EncodedDialogue> dialogues;
};

void save_encoded_corpus(const EncodedCorpus& corpus, const std::string& path);
EncodedCorpus load_encoded_corpus(const std::string& path);

}  // namespace leapmood

#endif
