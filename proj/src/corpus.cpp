#include "leapmood/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "leapmood/common.hpp"

namespace leapmood {

namespace {

constexpr const char* kEouSentinel = "__eou__";

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_utterances(const std::string& line) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos < line.size()) {
        std::size_t hit = line.find(kEouSentinel, pos);
        if (hit == std::string::npos) {
            std::string tail = trim(line.substr(pos));
            if (!tail.empty()) parts.push_back(std::move(tail));
            break;
        }
        std::string seg = trim(line.substr(pos, hit - pos));
        if (!seg.empty()) parts.push_back(std::move(seg));
        pos = hit + std::string(kEouSentinel).size();
    }
    return parts;
}

}  // namespace

LabelSet LabelSet::dailydialog() {
    return LabelSet{{"other", "anger", "disgust", "fear", "happy", "sad", "surprise"}, {0}};
}

int LabelSet::id_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

bool LabelSet::is_excluded(int id) const {
    return std::find(excluded_for_averaging.begin(), excluded_for_averaging.end(), id) !=
           excluded_for_averaging.end();
}

std::vector<std::string> split_dailydialog_line(const std::string& line) {
    return split_utterances(line);
}

std::vector<Dialogue> load_dailydialog(const std::string& text_path,
                                       const std::string& labels_path,
                                       const LabelSet& label_set) {
    std::ifstream text_in(text_path);
    if (!text_in) throw InputError("cannot open dialogue text file: " + text_path);
    std::ifstream labels_in(labels_path);
    if (!labels_in) throw InputError("cannot open dialogue label file: " + labels_path);

    std::vector<Dialogue> dialogues;
    std::string text_line, label_line;
    std::size_t line_no = 0;
    while (true) {
        const bool got_text = static_cast<bool>(std::getline(text_in, text_line));
        const bool got_labels = static_cast<bool>(std::getline(labels_in, label_line));
        if (!got_text && !got_labels) break;
        ++line_no;
        if (got_text != got_labels) {
            throw InputError("dialogue files disagree on line count at line " +
                             std::to_string(line_no));
        }

        Dialogue dlg;
        dlg.utterances = split_utterances(text_line);

        std::istringstream ls(label_line);
        std::string tok;
        while (ls >> tok) {
            int id;
            try {
                std::size_t used = 0;
                id = std::stoi(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw InputError("line " + std::to_string(line_no) + ": bad label token '" +
                                 tok + "'");
            }
            if (id < 0 || id >= static_cast<int>(label_set.size())) {
                throw InputError("line " + std::to_string(line_no) + ": unknown label id " +
                                 std::to_string(id));
            }
            dlg.labels.push_back(id);
        }

        // tolerate fully blank line pairs (trailing newline etc.)
        if (dlg.utterances.empty() && dlg.labels.empty()) continue;
        if (dlg.utterances.size() != dlg.labels.size()) {
            throw InputError("line " + std::to_string(line_no) + ": " +
                             std::to_string(dlg.utterances.size()) + " utterances but " +
                             std::to_string(dlg.labels.size()) + " labels");
        }
        dialogues.push_back(std::move(dlg));
    }
    return dialogues;
}

std::vector<std::uint64_t> label_histogram(const std::vector<Dialogue>& dialogues,
                                           const LabelSet& label_set) {
    std::vector<std::uint64_t> hist(label_set.size(), 0);
    for (const auto& dlg : dialogues) {
        for (int lab : dlg.labels) ++hist[static_cast<std::size_t>(lab)];
    }
    return hist;
}

namespace {

/// RFC-4180 record reader: handles quoted fields with embedded commas,
/// doubled quotes, and embedded newlines.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int c;
    while ((c = in.get()) != EOF) {
        saw_any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (!saw_any) return false;
    fields.push_back(std::move(field));
    return true;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::vector<ChatMessage> load_chat_csv(const std::string& path, const LabelSet& label_set) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open chat CSV: " + path);

    std::vector<std::string> fields;
    if (!read_csv_record(in, fields)) throw InputError("chat CSV is empty: " + path);
    if (fields.size() != 4 || fields[0] != "timestamp" || fields[1] != "text" ||
        fields[2] != "emotion" || fields[3] != "group") {
        throw InputError("chat CSV " + path + ": expected header timestamp,text,emotion,group");
    }

    std::vector<ChatMessage> messages;
    std::size_t row = 0;
    while (read_csv_record(in, fields)) {
        ++row;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        if (fields.size() != 4) {
            throw InputError("chat CSV row " + std::to_string(row) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        }
        ChatMessage msg;
        try {
            std::size_t used = 0;
            msg.timestamp = std::stoll(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
        } catch (const std::exception&) {
            throw InputError("chat CSV row " + std::to_string(row) + ": bad timestamp '" +
                             fields[0] + "'");
        }
        if (msg.timestamp < 0) {
            throw InputError("chat CSV row " + std::to_string(row) + ": negative timestamp");
        }
        msg.text = fields[1];
        if (!fields[2].empty()) {
            const int id = label_set.id_of(fields[2]);
            if (id < 0) {
                throw InputError("chat CSV row " + std::to_string(row) + ": unknown emotion '" +
                                 fields[2] + "'");
            }
            msg.emotion_label = id;
        }
        if (!fields[3].empty()) {
            try {
                std::size_t used = 0;
                msg.group_id = std::stoi(fields[3], &used);
                if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
            } catch (const std::exception&) {
                throw InputError("chat CSV row " + std::to_string(row) + ": bad group '" +
                                 fields[3] + "'");
            }
        }
        messages.push_back(std::move(msg));
    }

    std::stable_sort(messages.begin(), messages.end(),
                     [](const ChatMessage& a, const ChatMessage& b) {
                         return a.timestamp < b.timestamp;
                     });
    return messages;
}

void save_chat_csv(const std::vector<ChatMessage>& messages, const LabelSet& label_set,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write chat CSV: " + path);
    out << "timestamp,text,emotion,group\n";
    for (const auto& msg : messages) {
        out << msg.timestamp << ',' << csv_quote(msg.text) << ',';
        if (msg.emotion_label) out << label_set.names.at(static_cast<std::size_t>(*msg.emotion_label));
        out << ',';
        if (msg.group_id) out << *msg.group_id;
        out << '\n';
    }
}

std::vector<MoodGroup> group_by_window(const std::vector<ChatMessage>& messages,
                                       int window_minutes) {
    if (window_minutes < 1) throw InputError("window_minutes must be >= 1");
    const std::int64_t window_seconds = static_cast<std::int64_t>(window_minutes) * 60;

    std::vector<MoodGroup> groups;
    for (const auto& msg : messages) {
        if (groups.empty() || msg.timestamp >= groups.back().window_start + window_seconds) {
            MoodGroup g;
            g.window_start = msg.timestamp;
            groups.push_back(std::move(g));
        }
        groups.back().messages.push_back(msg);
    }
    return groups;
}

}  // namespace leapmood
