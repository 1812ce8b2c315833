#include "leapmood/textprep.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "leapmood/common.hpp"

namespace leapmood {

namespace {

bool is_kept(char c) {
    return (c >= 'a' && c <= 'z') || c == ' ' || c == '\'';
}

}  // namespace

std::string clean_text(const std::string& raw) {
    // Marker for a number tag; \x01 can never survive the character filter,
    // so input text cannot forge one.
    constexpr char kNumMark = '\x01';

    std::string filtered;
    filtered.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        // protect an already-tagged <num> (keeps cleaning idempotent)
        if (raw.compare(i, 5, kNumToken) == 0) {
            filtered.push_back(kNumMark);
            i += 5;
            continue;
        }
        unsigned char uc = static_cast<unsigned char>(raw[i]);
        if (std::isdigit(uc)) {
            while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) ++i;
            filtered.push_back(kNumMark);
            continue;
        }
        char c = raw[i];
        if (uc < 0x80) {
            c = static_cast<char>(std::tolower(uc));
            if (std::isspace(static_cast<unsigned char>(c))) c = ' ';
            if (is_kept(c)) filtered.push_back(c);
        }
        // bytes >= 0x80 (emoji, any non-ASCII) are dropped
        ++i;
    }

    // collapse whitespace, trim, expand markers
    std::string out;
    out.reserve(filtered.size() + 8);
    bool pending_space = false;
    for (char c : filtered) {
        if (c == ' ') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (c == '\x01') {
            out += kNumToken;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

AcronymMap AcronymMap::from_entries(const std::map<std::string, std::string>& entries,
                                    std::size_t cap) {
    if (entries.size() > cap) {
        throw InputError("acronym map has " + std::to_string(entries.size()) +
                         " entries, cap is " + std::to_string(cap));
    }
    for (const auto& [key, value] : entries) {
        if (key.empty()) throw InputError("acronym map contains an empty key");
        for (char c : key) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                throw InputError("acronym key '" + key + "' is not a single token");
            }
            if (std::isupper(static_cast<unsigned char>(c))) {
                throw InputError("acronym key '" + key + "' is not lowercase");
            }
        }
        (void)value;
    }
    AcronymMap m;
    m.entries_ = entries;
    return m;
}

AcronymMap AcronymMap::load_json(const std::string& path, std::size_t cap) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open acronym map: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("acronym map " + path + ": " + e.what());
    }
    if (!j.is_object()) throw InputError("acronym map " + path + ": expected a JSON object");
    std::map<std::string, std::string> entries;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) {
            throw InputError("acronym map " + path + ": value for '" + it.key() +
                             "' is not a string");
        }
        entries[it.key()] = it.value().get<std::string>();
    }
    return from_entries(entries, cap);
}

std::string expand_acronyms(const std::string& cleaned, const AcronymMap& map) {
    std::string out;
    out.reserve(cleaned.size());
    std::istringstream ss(cleaned);
    std::string tok;
    bool first = true;
    while (ss >> tok) {
        if (!first) out.push_back(' ');
        first = false;
        auto it = map.entries().find(tok);
        out += (it != map.entries().end()) ? it->second : tok;
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    return tokens;
}

}  // namespace leapmood
