#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "leapmood/common.hpp"
#include "leapmood/encode.hpp"
#include "leapmood/rng.hpp"
#include "leapmood/soundex.hpp"
#include "leapmood/textprep.hpp"
#include "leapmood/vocab.hpp"

#include "test_util.hpp"

using namespace leapmood;

TEST_CASE("clean_text applies the documented rules") {
    CHECK(clean_text("Hello!!!  WORLD \xF0\x9F\x98\x80") == "hello world");
    CHECK(clean_text("") == "");
    CHECK(clean_text("i paid 120 bucks") == "i paid <num> bucks");
    CHECK(clean_text("don't STOP") == "don't stop");
    CHECK(clean_text("a\tb\nc") == "a b c");
    CHECK(clean_text("  spaced   out  ") == "spaced out");
    CHECK(clean_text("room 12b") == "room <num>b");
}

TEST_CASE("clean_text is idempotent, number tags included") {
    Rng rng(99);
    const std::string alphabet = "abcXYZ 012!?.,'<>#\xF0\x9F\x98\x80\xC3\xA9";
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const int len = static_cast<int>(rng.uniform_int(0, 40));
        for (int i = 0; i < len; ++i) {
            s.push_back(alphabet[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1))]);
        }
        const std::string once = clean_text(s);
        CHECK(clean_text(once) == once);
    }
    CHECK(clean_text(clean_text("price was 12 dollars")) == "price was <num> dollars");
}

TEST_CASE("expand_acronyms: single pass, per token") {
    const AcronymMap map = AcronymMap::from_entries(
        {{"brb", "be right back"}, {"hr", "hour"}});
    CHECK(expand_acronyms("brb in an hr", map) == "be right back in an hour");
    CHECK(expand_acronyms("hour", map) == "hour");
    CHECK(expand_acronyms("hr hr", map) == "hour hour");
    CHECK(expand_acronyms("", map) == "");
}

TEST_CASE("acronym map validation") {
    CHECK_THROWS_AS(AcronymMap::from_entries({{"two words", "x"}}), InputError);
    CHECK_THROWS_AS(AcronymMap::from_entries({{"Upper", "x"}}), InputError);
    CHECK_THROWS_AS(AcronymMap::from_entries({{"a", "1"}, {"b", "2"}}, 1), InputError);
}

TEST_CASE("shipped acronym map loads and stays within the 100-entry cap") {
    const AcronymMap map = AcronymMap::load_json(std::string(TEST_SOURCE_DIR) +
                                                 "/../data/acronyms.json");
    CHECK(map.entries().size() == 100);
    CHECK(map.entries().at("brb") == "be right back");
    CHECK(map.entries().at("hr") == "hour");
}

TEST_CASE("tokenize splits on whitespace") {
    CHECK(tokenize("ill see you") == std::vector<std::string>{"ill", "see", "you"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("<num> dollars") == std::vector<std::string>{"<num>", "dollars"});
}

TEST_CASE("soundex matches the published code table") {
    CHECK(soundex("happy") == "H100");
    CHECK(soundex("happyyyyyyy") == "H100");
    CHECK(soundex("elephant") == "E415");
    CHECK(soundex("elefant") == "E415");
    CHECK(soundex("awesome") == "A250");
    CHECK(soundex("awesoooomeeee") == "A250");
}

TEST_CASE("soundex classic-algorithm details") {
    CHECK(soundex("ashcraft") == "A261");  // h between equal-coded letters
    CHECK(soundex("tymczak") == "T522");   // vowel separates equal codes
    CHECK(soundex("pfister") == "P236");   // leading digit equal to first letter's code
    CHECK(soundex("robert") == "R163");
    CHECK(soundex("rupert") == "R163");
    CHECK(soundex("<num>") == kSoundexNoLetters);
    CHECK(soundex("''") == kSoundexNoLetters);
    CHECK(soundex("o'brien") == soundex("obrien"));
}

TEST_CASE("soundex is invariant under consecutive letter repetition") {
    Rng rng(1234);
    for (int trial = 0; trial < 500; ++trial) {
        std::string word;
        const int len = static_cast<int>(rng.uniform_int(3, 8));
        for (int i = 0; i < len; ++i) {
            word.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
        }
        std::string stretched;
        for (char c : word) {
            const int reps = static_cast<int>(rng.uniform_int(1, 4));
            stretched.append(static_cast<std::size_t>(reps), c);
        }
        CAPTURE(word);
        CAPTURE(stretched);
        CHECK(soundex(word) == soundex(stretched));
    }
}

TEST_CASE("build_vocab ranks by frequency with lexicographic ties") {
    SUBCASE("top-1 by count") {
        const Vocab v = build_vocab({{"a", "a", "a", "b"}}, 1);
        CHECK(v.words() == std::vector<std::string>{"a"});
        CHECK(v.id_of("a") == kReservedWords);
        CHECK(v.id_of("b") == -1);
    }
    SUBCASE("tie broken lexicographically") {
        const Vocab v = build_vocab({{"b", "a", "b", "a"}}, 1);
        CHECK(v.words() == std::vector<std::string>{"a"});
    }
    SUBCASE("phonetic index carries the published code") {
        const Vocab v = build_vocab({{"happy", "happy", "happy", "happy", "happy"}}, 10);
        CHECK(v.phonetic_match("H100") == v.id_of("happy"));
    }
    SUBCASE("reserved ids never reassigned") {
        const Vocab v = build_vocab({{"<num>", "x", "<pad>", "<unk>"}}, 10);
        CHECK(v.id_of("<num>") == kNumId);
        CHECK(v.id_of("<pad>") == kPadId);
        CHECK(v.id_of("<unk>") == kUnkId);
        CHECK(v.id_of("x") == kReservedWords);
    }
}

TEST_CASE("build_vocab is deterministic under input order") {
    Rng rng(5);
    std::vector<std::string> tokens;
    for (int i = 0; i < 400; ++i) {
        tokens.push_back("w" + std::to_string(rng.uniform_int(0, 80)));
    }
    const Vocab a = build_vocab({tokens}, 50);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
        for (std::size_t i = tokens.size(); i > 1; --i) {
            std::swap(tokens[i - 1],
                      tokens[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        }
        const Vocab b = build_vocab({tokens}, 50);
        CHECK(a.to_json() == b.to_json());
    }
}

TEST_CASE("vocab JSON round trip is byte-stable") {
    const Vocab v = build_vocab({{"happy", "sad", "happy", "day", "elephant"}}, 100);
    testutil::TempDir tmp("vocab");
    v.save(tmp.path("vocab.json"));
    const Vocab reloaded = Vocab::load(tmp.path("vocab.json"));
    CHECK(reloaded.to_json() == v.to_json());
    CHECK(reloaded.fingerprint() == v.fingerprint());

    reloaded.save(tmp.path("vocab2.json"));
    CHECK(testutil::read_text(tmp.path("vocab.json")) ==
          testutil::read_text(tmp.path("vocab2.json")));
}

TEST_CASE("char vocab holds 30 content characters plus reserved") {
    const CharVocab cv;
    CHECK(cv.content_chars().size() == 30);
    CHECK(cv.size() == 32);
    CHECK(cv.id_of('a') == 2);
    CHECK(cv.id_of('\'') > 1);
    CHECK(cv.id_of('<') > 1);
    CHECK(cv.id_of('>') > 1);
    CHECK(cv.id_of('5') == cv.id_of('#'));  // digits collapse to the placeholder
    CHECK(cv.id_of('!') == kUnkId);
    std::set<int> distinct;
    for (char c : cv.content_chars()) distinct.insert(cv.id_of(c));
    CHECK(distinct.size() == 30);
}

TEST_CASE("encode_utterance: OOV recovery through the phonetic index") {
    const Vocab vocab = build_vocab({{"elephant", "elephant", "hello"}}, 10);
    const CharVocab cvocab;

    SUBCASE("misspelling lands on the in-vocab word; chars keep the surface form") {
        const auto enc = encode_utterance({"elefant"}, vocab, cvocab, 10, 10);
        CHECK(enc.word_ids[0] == vocab.id_of("elephant"));
        const std::string surface = "elefant";
        for (std::size_t c = 0; c < surface.size(); ++c) {
            CHECK(enc.char_at(0, c) == cvocab.id_of(surface[c]));
        }
        CHECK(enc.char_at(0, surface.size()) == kPadId);
    }
    SUBCASE("no phonetic match falls back to UNK") {
        const auto enc = encode_utterance({"qqqq"}, vocab, cvocab, 10, 10);
        CHECK(enc.word_ids[0] == kUnkId);
    }
    SUBCASE("truncation keeps the head") {
        std::vector<std::string> tokens(120, "hello");
        const auto enc = encode_utterance(tokens, vocab, cvocab, 100, 10);
        CHECK(enc.valid_len == 100);
        CHECK(enc.word_ids.size() == 100);
        CHECK(enc.word_ids[99] == vocab.id_of("hello"));
    }
    SUBCASE("number tag encodes as the reserved id") {
        const auto enc = encode_utterance({"<num>"}, vocab, cvocab, 4, 6);
        CHECK(enc.word_ids[0] == kNumId);
    }
}

TEST_CASE("encode_utterance output shape invariants hold for arbitrary input") {
    const Vocab vocab = build_vocab({{"aa", "bb", "cc", "dd"}}, 3);
    const CharVocab cvocab;
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(0, 30));
        std::vector<std::string> tokens;
        for (std::size_t i = 0; i < n; ++i) {
            std::string tok;
            const int len = static_cast<int>(rng.uniform_int(1, 14));
            for (int c = 0; c < len; ++c) {
                tok.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
            }
            tokens.push_back(tok);
        }
        const std::size_t max_seq = 12, max_chars = 7;
        const auto enc = encode_utterance(tokens, vocab, cvocab, max_seq, max_chars);

        CHECK(enc.word_ids.size() == max_seq);
        CHECK(enc.char_ids.size() == max_seq * max_chars);
        CHECK(enc.valid_len == std::min(n, max_seq));
        for (std::size_t t = 0; t < max_seq; ++t) {
            if (t >= enc.valid_len) {
                CHECK(enc.word_ids[t] == kPadId);
                for (std::size_t c = 0; c < max_chars; ++c) CHECK(enc.char_at(t, c) == kPadId);
            } else {
                // substitution never leaves vocab + UNK
                const int id = enc.word_ids[t];
                CHECK(id >= 0);
                CHECK(static_cast<std::size_t>(id) < vocab.total_size());
                CHECK(id != kPadId);
                // in-vocab tokens are never substituted
                if (vocab.id_of(tokens[t]) >= 0) CHECK(id == vocab.id_of(tokens[t]));
            }
        }
    }
}
