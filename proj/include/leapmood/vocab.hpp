#ifndef LEAPMOOD_VOCAB_HPP
#define LEAPMOOD_VOCAB_HPP

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace leapmood {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kNumId = 2;
inline constexpr int kReservedWords = 3;

/// Frequency-ranked word table with reserved ids and a Soundex index over the
/// kept tokens for OOV recovery. Immutable once built.
class Vocab {
public:
    Vocab() = default;

    /// `words` in rank order (most frequent first, ties already broken);
    /// ids are assigned as kReservedWords + rank.
    static Vocab from_ranked_words(std::vector<std::string> words, std::size_t max_size);

    /// -1 when absent. Reserved names ("<pad>", "<unk>", "<num>") resolve to
    /// their fixed ids.
    int id_of(const std::string& token) const;
    const std::string& word_of(int id) const;

    /// Most frequent in-vocab token id under `code`, or -1. The sentinel
    /// code "0000" never matches.
    int phonetic_match(const std::string& code) const;

    const std::vector<std::string>& words() const { return words_; }
    const std::map<std::string, std::vector<int>>& phonetic_index() const {
        return phonetic_index_;
    }
    std::size_t max_size() const { return max_size_; }

    /// Total id count including the 3 reserved slots; this is the embedding
    /// row count a model built on this vocab must use.
    std::size_t total_size() const { return words_.size() + kReservedWords; }

    /// Byte-stable JSON (sorted keys, fixed indentation) so vocab files diff
    /// cleanly and fingerprints are meaningful.
    std::string to_json() const;
    static Vocab from_json(const std::string& text);
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

    std::uint64_t fingerprint() const;

private:
    std::vector<std::string> words_;  // rank order; id = kReservedWords + index
    std::unordered_map<std::string, int> word_to_id_;
    std::map<std::string, std::vector<int>> phonetic_index_;  // code -> ids, ascending
    std::size_t max_size_ = 0;
};

/// Count tokens across the corpus, rank by descending frequency with
/// lexicographic tie-break, keep the top `max_size`. Reserved tokens are
/// never ranked.
Vocab build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t max_size);

/// Fixed 30-character content set (a-z, apostrophe, '<', '>', '#') plus
/// PAD=0 / UNK=1. '#' stands in for any digit so raw surface forms stay
/// encodable.
class CharVocab {
public:
    CharVocab();

    int id_of(char c) const;
    std::size_t size() const { return 32; }  // 30 content + PAD + UNK
    const std::string& content_chars() const { return content_; }

private:
    std::string content_;
    int table_[256];
};

}  // namespace leapmood

#endif
