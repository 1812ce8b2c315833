#include "leapmood/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "leapmood/common.hpp"
#include "leapmood/soundex.hpp"
#include "leapmood/textprep.hpp"

namespace leapmood {

namespace {
const char* kReservedNames[kReservedWords] = {"<pad>", "<unk>", "<num>"};
constexpr int kVocabFormatVersion = 1;
}  // namespace

Vocab Vocab::from_ranked_words(std::vector<std::string> words, std::size_t max_size) {
    Vocab v;
    v.max_size_ = max_size;
    v.words_ = std::move(words);
    if (v.words_.size() > max_size) v.words_.resize(max_size);
    v.word_to_id_.reserve(v.words_.size());
    for (std::size_t i = 0; i < v.words_.size(); ++i) {
        const int id = kReservedWords + static_cast<int>(i);
        if (!v.word_to_id_.emplace(v.words_[i], id).second) {
            throw InputError("duplicate token in vocabulary: " + v.words_[i]);
        }
        v.phonetic_index_[soundex(v.words_[i])].push_back(id);
    }
    return v;
}

int Vocab::id_of(const std::string& token) const {
    auto it = word_to_id_.find(token);
    if (it != word_to_id_.end()) return it->second;
    for (int r = 0; r < kReservedWords; ++r) {
        if (token == kReservedNames[r]) return r;
    }
    return -1;
}

const std::string& Vocab::word_of(int id) const {
    if (id >= 0 && id < kReservedWords) {
        static const std::string names[kReservedWords] = {"<pad>", "<unk>", "<num>"};
        return names[id];
    }
    return words_.at(static_cast<std::size_t>(id - kReservedWords));
}

int Vocab::phonetic_match(const std::string& code) const {
    if (code == kSoundexNoLetters) return -1;
    auto it = phonetic_index_.find(code);
    if (it == phonetic_index_.end() || it->second.empty()) return -1;
    // ids were assigned in rank order, and rank order is (frequency desc,
    // token asc), so the smallest id is the required tie-broken winner
    return it->second.front();
}

std::string Vocab::to_json() const {
    nlohmann::json j;
    j["format_version"] = kVocabFormatVersion;
    j["max_size"] = max_size_;
    j["words"] = words_;
    j["reserved"] = {{"<pad>", kPadId}, {"<unk>", kUnkId}, {"<num>", kNumId}};
    nlohmann::json idx = nlohmann::json::object();
    for (const auto& [code, ids] : phonetic_index_) idx[code] = ids;
    j["phonetic_index"] = idx;
    return j.dump(2) + "\n";
}

Vocab Vocab::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("vocabulary file is not valid JSON: ") + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != kVocabFormatVersion) {
        throw InputError("vocabulary file has unsupported format version");
    }
    Vocab v = from_ranked_words(j.at("words").get<std::vector<std::string>>(),
                                j.at("max_size").get<std::size_t>());
    // phonetic_index is derived data; rebuilt rather than trusted
    return v;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write vocabulary file: " + path);
    out << to_json();
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open vocabulary file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::uint64_t Vocab::fingerprint() const { return fnv1a64(to_json()); }

Vocab build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t max_size) {
    std::map<std::string, std::uint64_t> counts;  // ordered: lexicographic ties for free
    for (const auto& stream : corpus) {
        for (const auto& tok : stream) {
            if (tok.empty()) continue;
            if (tok == "<pad>" || tok == "<unk>" || tok == kNumToken) continue;
            ++counts[tok];
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> words;
    words.reserve(std::min(max_size, ranked.size()));
    for (const auto& [tok, cnt] : ranked) {
        if (words.size() >= max_size) break;
        words.push_back(tok);
        (void)cnt;
    }
    return Vocab::from_ranked_words(std::move(words), max_size);
}

CharVocab::CharVocab() : content_("abcdefghijklmnopqrstuvwxyz'<>#") {
    for (int& v : table_) v = kUnkId;
    for (std::size_t i = 0; i < content_.size(); ++i) {
        table_[static_cast<unsigned char>(content_[i])] = 2 + static_cast<int>(i);
    }
    // digits collapse onto the '#' placeholder
    const int hash_id = table_[static_cast<unsigned char>('#')];
    for (char d = '0'; d <= '9'; ++d) table_[static_cast<unsigned char>(d)] = hash_id;
}

int CharVocab::id_of(char c) const { return table_[static_cast<unsigned char>(c)]; }

}  // namespace leapmood
