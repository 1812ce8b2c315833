#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "leapmood/common.hpp"
#include "leapmood/corpus.hpp"
#include "leapmood/rng.hpp"

#include "test_util.hpp"

using namespace leapmood;

TEST_CASE("dailydialog loader parses the documented line format") {
    testutil::TempDir tmp("corpus_dd");
    testutil::write_text(tmp.path("text.txt"), "Hi ! __eou__ Great news ! __eou__\n");
    testutil::write_text(tmp.path("labels.txt"), "0 4\n");

    const auto dialogues =
        load_dailydialog(tmp.path("text.txt"), tmp.path("labels.txt"), LabelSet::dailydialog());
    REQUIRE(dialogues.size() == 1);
    CHECK(dialogues[0].utterances == std::vector<std::string>{"Hi !", "Great news !"});
    CHECK(dialogues[0].labels == std::vector<int>{0, 4});  // other, happy
}

TEST_CASE("dailydialog loader: empty file pair gives an empty corpus") {
    testutil::TempDir tmp("corpus_empty");
    testutil::write_text(tmp.path("text.txt"), "");
    testutil::write_text(tmp.path("labels.txt"), "");
    CHECK(load_dailydialog(tmp.path("text.txt"), tmp.path("labels.txt"), LabelSet::dailydialog())
              .empty());
}

TEST_CASE("dailydialog loader errors name the offending line") {
    testutil::TempDir tmp("corpus_err");
    testutil::write_text(tmp.path("text.txt"),
                         "a __eou__ b __eou__\nx __eou__ y __eou__ z __eou__\n");
    testutil::write_text(tmp.path("labels.txt"), "0 1\n0 1\n");
    try {
        load_dailydialog(tmp.path("text.txt"), tmp.path("labels.txt"), LabelSet::dailydialog());
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    SUBCASE("unknown label id") {
        testutil::write_text(tmp.path("labels.txt"), "0 9\n0 1 2\n");
        CHECK_THROWS_AS(load_dailydialog(tmp.path("text.txt"), tmp.path("labels.txt"),
                                         LabelSet::dailydialog()),
                        InputError);
    }
}

TEST_CASE("label histogram reports per-label utterance counts") {
    testutil::TempDir tmp("corpus_hist");
    testutil::write_text(tmp.path("text.txt"), "a __eou__ b __eou__ c __eou__\n");
    testutil::write_text(tmp.path("labels.txt"), "4 4 0\n");
    const auto dialogues =
        load_dailydialog(tmp.path("text.txt"), tmp.path("labels.txt"), LabelSet::dailydialog());
    const auto hist = label_histogram(dialogues, LabelSet::dailydialog());
    CHECK(hist[0] == 1);
    CHECK(hist[4] == 2);
}

TEST_CASE("chat CSV loads sorted by timestamp, stable on ties") {
    testutil::TempDir tmp("corpus_csv");
    testutil::write_text(tmp.path("chat.csv"),
                         "timestamp,text,emotion,group\n"
                         "100,\"yay!\",happy,1\n"
                         "50,oh no,fear,1\n"
                         "50,second at same tick,,\n");
    const auto messages = load_chat_csv(tmp.path("chat.csv"), LabelSet::dailydialog());
    REQUIRE(messages.size() == 3);
    CHECK(messages[0].timestamp == 50);
    CHECK(messages[0].text == "oh no");
    CHECK(messages[1].text == "second at same tick");  // stable tie
    CHECK(messages[2].timestamp == 100);
    CHECK(messages[2].emotion_label == 4);
    CHECK_FALSE(messages[1].emotion_label.has_value());
}

TEST_CASE("chat CSV rejects unknown emotions and bad timestamps with row numbers") {
    testutil::TempDir tmp("corpus_csv_err");
    testutil::write_text(tmp.path("chat.csv"),
                         "timestamp,text,emotion,group\n100,hello,joyful,\n");
    try {
        load_chat_csv(tmp.path("chat.csv"), LabelSet::dailydialog());
        FAIL("expected InputError");
    } catch (const InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("joyful") != std::string::npos);
    }

    testutil::write_text(tmp.path("chat.csv"), "timestamp,text,emotion,group\nnope,hello,,\n");
    CHECK_THROWS_AS(load_chat_csv(tmp.path("chat.csv"), LabelSet::dailydialog()), InputError);

    SUBCASE("empty body under a valid header") {
        testutil::write_text(tmp.path("chat.csv"), "timestamp,text,emotion,group\n");
        CHECK(load_chat_csv(tmp.path("chat.csv"), LabelSet::dailydialog()).empty());
    }
}

TEST_CASE("chat CSV round trip preserves the message list exactly") {
    testutil::TempDir tmp("corpus_rt");
    const LabelSet labels = LabelSet::dailydialog();
    std::vector<ChatMessage> messages;
    Rng rng(77);
    for (int i = 0; i < 40; ++i) {
        ChatMessage msg;
        msg.timestamp = rng.uniform_int(0, 100000);
        msg.text = "line " + std::to_string(i);
        if (i % 3 == 0) msg.text += ", with \"quotes\" and\nnewline";
        if (i % 2 == 0) msg.emotion_label = static_cast<int>(rng.uniform_int(0, 6));
        if (i % 5 == 0) msg.group_id = i;
        messages.push_back(std::move(msg));
    }
    std::stable_sort(messages.begin(), messages.end(),
                     [](const ChatMessage& a, const ChatMessage& b) {
                         return a.timestamp < b.timestamp;
                     });

    save_chat_csv(messages, labels, tmp.path("chat.csv"));
    const auto reloaded = load_chat_csv(tmp.path("chat.csv"), labels);
    CHECK(reloaded == messages);
}

TEST_CASE("group_by_window implements tumbling windows anchored at first message") {
    auto mk = [](std::int64_t ts) {
        ChatMessage m;
        m.timestamp = ts;
        return m;
    };

    SUBCASE("0, 30, 59 minutes in one 60-minute group") {
        const auto groups = group_by_window({mk(0), mk(30 * 60), mk(59 * 60)}, 60);
        REQUIRE(groups.size() == 1);
        CHECK(groups[0].messages.size() == 3);
        CHECK(groups[0].window_start == 0);
    }
    SUBCASE("61 minutes opens a second group") {
        const auto groups = group_by_window({mk(0), mk(61 * 60)}, 60);
        REQUIRE(groups.size() == 2);
        CHECK(groups[1].window_start == 61 * 60);
    }
    SUBCASE("exactly at the boundary opens a new group") {
        const auto groups = group_by_window({mk(0), mk(60 * 60)}, 60);
        CHECK(groups.size() == 2);
    }
    SUBCASE("single message and empty input") {
        const auto one = group_by_window({mk(123)}, 60);
        REQUIRE(one.size() == 1);
        CHECK(one[0].window_start == 123);
        CHECK(group_by_window({}, 60).empty());
    }
    SUBCASE("window override shifts the boundaries: 0/40/80 minutes") {
        const std::vector<ChatMessage> msgs = {mk(0), mk(40 * 60), mk(80 * 60)};
        const auto hour = group_by_window(msgs, 60);
        REQUIRE(hour.size() == 2);  // {0, 40} then {80}
        CHECK(hour[0].messages.size() == 2);
        CHECK(hour[1].window_start == 80 * 60);
        const auto half = group_by_window(msgs, 30);
        REQUIRE(half.size() == 3);  // every message opens its own window
        CHECK(half[1].window_start == 40 * 60);
        CHECK(half[2].window_start == 80 * 60);
    }
}

TEST_CASE("windowing properties: partition and window bound") {
    Rng rng(420);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ChatMessage> messages;
        std::int64_t ts = 0;
        const int n = static_cast<int>(rng.uniform_int(0, 60));
        for (int i = 0; i < n; ++i) {
            ts += rng.uniform_int(0, 45 * 60);
            ChatMessage m;
            m.timestamp = ts;
            m.text = std::to_string(i);
            messages.push_back(std::move(m));
        }
        const int window_minutes = static_cast<int>(rng.uniform_int(1, 90));
        const auto groups = group_by_window(messages, window_minutes);

        std::vector<ChatMessage> flattened;
        for (const auto& g : groups) {
            REQUIRE_FALSE(g.messages.empty());
            CHECK(g.window_start == g.messages.front().timestamp);
            CHECK(g.messages.back().timestamp - g.window_start <
                  static_cast<std::int64_t>(window_minutes) * 60);
            for (const auto& m : g.messages) flattened.push_back(m);
        }
        CHECK(flattened == messages);
    }
}

TEST_CASE("group_by_window rejects a non-positive window") {
    CHECK_THROWS_AS(group_by_window({}, 0), InputError);
}
