#include "leapmood/soundex.hpp"

#include <cctype>

namespace leapmood {

namespace {

// b f p v -> 1, c g j k q s x z -> 2, d t -> 3, l -> 4, m n -> 5, r -> 6.
// Vowels and y are separators (0), h and w are transparent (-1).
int consonant_class(char upper) {
    switch (upper) {
        case 'B': case 'F': case 'P': case 'V': return 1;
        case 'C': case 'G': case 'J': case 'K': case 'Q':
        case 'S': case 'X': case 'Z': return 2;
        case 'D': case 'T': return 3;
        case 'L': return 4;
        case 'M': case 'N': return 5;
        case 'R': return 6;
        case 'H': case 'W': return -1;
        default: return 0;  // A E I O U Y
    }
}

}  // namespace

std::string soundex(const std::string& token) {
    std::string letters;
    letters.reserve(token.size());
    for (char c : token) {
        // tag tokens like <num> are not words; they never get a real code
        if (c == '<' || c == '>') return kSoundexNoLetters;
        if (std::isalpha(static_cast<unsigned char>(c))) {
            letters.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    if (letters.empty()) return kSoundexNoLetters;

    std::string code(1, letters[0]);
    // The first letter's own class seeds the duplicate filter, so e.g. the
    // second b of "bb..." is dropped.
    int last = consonant_class(letters[0]);
    if (last < 0) last = 0;

    for (std::size_t i = 1; i < letters.size() && code.size() < 4; ++i) {
        const int cls = consonant_class(letters[i]);
        if (cls < 0) continue;  // h/w do not separate equal-coded letters
        if (cls == 0) {        // vowels do
            last = 0;
            continue;
        }
        if (cls != last) {
            code.push_back(static_cast<char>('0' + cls));
            last = cls;
        }
    }

    code.append(4 - code.size(), '0');
    return code;
}

}  // namespace leapmood
