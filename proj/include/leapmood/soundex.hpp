#ifndef LEAPMOOD_SOUNDEX_HPP
#define LEAPMOOD_SOUNDEX_HPP

#include <string>

namespace leapmood {

/// Sentinel code for tokens without any ASCII letter. It is never entered
/// into a phonetic index lookup, so such tokens can only fall back to UNK.
inline constexpr const char* kSoundexNoLetters = "0000";

/// American Soundex: one uppercase letter + three digits. Phonetically
/// similar spellings (repeated letters, common misspellings) collide, which
/// is what makes the code usable for OOV recovery.
std::string soundex(const std::string& token);

}  // namespace leapmood

#endif
