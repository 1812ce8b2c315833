#ifndef LEAPMOOD_CORPUS_HPP
#define LEAPMOOD_CORPUS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace leapmood {

/// Ordered emotion label names plus the subset excluded from metric
/// averaging (the dominant `other` class, by convention id 0).
struct LabelSet {
    std::vector<std::string> names;
    std::vector<int> excluded_for_averaging;

    /// DailyDialog order: 0=other, then anger..surprise.
    static LabelSet dailydialog();

    int id_of(const std::string& name) const;  // -1 when absent
    std::size_t size() const { return names.size(); }
    bool is_excluded(int id) const;
};

struct Dialogue {
    std::vector<std::string> utterances;
    std::vector<int> labels;
};

enum class Mood { Good, Bad };

inline const char* mood_name(Mood m) { return m == Mood::Good ? "GOOD" : "BAD"; }

struct ChatMessage {
    std::int64_t timestamp = 0;  // seconds since epoch
    std::string text;
    std::optional<int> emotion_label;
    std::optional<int> group_id;

    bool operator==(const ChatMessage&) const = default;
};

/// Messages of one tumbling time window, anchored at its first message.
struct MoodGroup {
    std::vector<ChatMessage> messages;
    std::optional<Mood> mood_label;
    std::int64_t window_start = 0;
};

/// Two-file layout: line i of the text file holds dialogue i's utterances
/// terminated by the `__eou__` sentinel; line i of the label file holds the
/// matching space-separated label ids. Count mismatches name the line.
std::vector<Dialogue> load_dailydialog(const std::string& text_path,
                                       const std::string& labels_path,
                                       const LabelSet& label_set);

/// Utterance segments of one DailyDialog-format line (no labels needed);
/// used for unlabeled prediction input.
std::vector<std::string> split_dailydialog_line(const std::string& line);

/// Per-label utterance counts over a loaded corpus.
std::vector<std::uint64_t> label_histogram(const std::vector<Dialogue>& dialogues,
                                           const LabelSet& label_set);

/// Header `timestamp,text,emotion,group`; text RFC-4180 quoted; emotion and
/// group may be empty. Result is sorted by timestamp, stable on ties.
std::vector<ChatMessage> load_chat_csv(const std::string& path, const LabelSet& label_set);

/// Inverse of load_chat_csv (modulo quoting): load(save(msgs)) == msgs.
void save_chat_csv(const std::vector<ChatMessage>& messages, const LabelSet& label_set,
                   const std::string& path);

/// Tumbling windows anchored at each group's first message: a message opens
/// a new group iff its timestamp >= window_start + window_minutes * 60.
/// Input must be sorted ascending.
std::vector<MoodGroup> group_by_window(const std::vector<ChatMessage>& messages,
                                       int window_minutes);

}  // namespace leapmood

#endif
