#ifndef LEAPMOOD_TEXTPREP_HPP
#define LEAPMOOD_TEXTPREP_HPP

#include <map>
#include <string>
#include <vector>

namespace leapmood {

inline constexpr const char* kNumToken = "<num>";

/// Lowercase; strip every codepoint outside {a-z, 0-9, space, apostrophe}
/// (emoji and punctuation fall out here); replace each maximal digit run with
/// the literal token `<num>`; collapse whitespace; trim. Idempotent: an
/// already-emitted `<num>` survives a second pass unchanged.
std::string clean_text(const std::string& raw);

/// token -> expansion phrase. Keys are lowercase single tokens; size capped.
class AcronymMap {
public:
    AcronymMap() = default;

    /// Throws InputError on non-lowercase or multi-token keys, or when the
    /// map exceeds `cap` entries.
    static AcronymMap from_entries(const std::map<std::string, std::string>& entries,
                                   std::size_t cap = 100);
    static AcronymMap load_json(const std::string& path, std::size_t cap = 100);

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Single left-to-right pass over whitespace tokens; tokens that are map keys
/// are replaced by their expansion, produced tokens are not re-expanded.
std::string expand_acronyms(const std::string& cleaned, const AcronymMap& map);

/// Whitespace split, order preserved.
std::vector<std::string> tokenize(const std::string& text);

}  // namespace leapmood

#endif
