#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <limits>
#include <filesystem>
#include <sstream>

#include "leapmood/cli.hpp"
#include "leapmood/common.hpp"
#include "leapmood/rng.hpp"

#include "test_util.hpp"

using namespace leapmood;

namespace {

const std::vector<std::string> kLabels = {"calm", "joy", "rage", "gloom"};

std::string fixture_config(const std::string& out_dir, const std::string& text_path,
                           const std::string& labels_path) {
    std::ostringstream j;
    j << "{\n"
      << "  \"seed\": 4242,\n"
      << "  \"out_dir\": \"" << out_dir << "\",\n"
      << "  \"labels\": {\"names\": [\"calm\", \"joy\", \"rage\", \"gloom\"]},\n"
      << "  \"data\": {\"format\": \"dailydialog\", \"text\": \"" << text_path
      << "\", \"labels\": \"" << labels_path << "\", \"val_fraction\": 0.0, "
      << "\"test_fraction\": 0.0, \"eval_split\": \"train\"},\n"
      << "  \"preprocess\": {\"vocab_size\": 500, \"max_seq_len\": 10, \"max_char_len\": 8},\n"
      << "  \"model\": {\"batch_size\": 6, \"epochs\": 40, \"word_emb_dim\": 10,\n"
      << "    \"char_emb_dim\": 5, \"char_lstm_hidden\": 6, \"bilstm_hidden\": 10,\n"
      << "    \"learning_rate\": 0.005, \"patience\": 6, \"metric\": \"micro_f1_excluding\"},\n"
      << "  \"ga\": {\"population_size\": 7, \"max_generations\": 10, \"evaluator\": "
         "\"surrogate\"}\n"
      << "}\n";
    return j.str();
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(LEAPMOOD_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("pipeline: preprocess -> train -> eval -> predict on a synthetic fixture") {
    testutil::TempDir tmp("cli_pipe");
    Rng rng(2025);
    const auto corpus =
        testutil::make_synthetic_corpus(24, rng, kLabels, {0.25, 0.25, 0.25, 0.25}, 0.97);
    testutil::write_dailydialog_files(corpus, tmp.path("text.txt"), tmp.path("labels.txt"));

    const std::string config_text =
        fixture_config(tmp.path("out"), tmp.path("text.txt"), tmp.path("labels.txt"));
    testutil::write_text(tmp.path("run.json"), config_text);
    const cli::RunConfig config = cli::RunConfig::load(tmp.path("run.json"));

    cli::run_preprocess(config);
    REQUIRE(std::filesystem::exists(config.vocab_path()));
    REQUIRE(std::filesystem::exists(config.corpus_path("train")));
    REQUIRE(std::filesystem::exists(config.stats_path()));

    SUBCASE("stats: phonetic recovery never increases the OOV count") {
        const std::string stats = testutil::read_text(config.stats_path());
        std::uint64_t before = 0, after = 0;
        std::istringstream lines(stats);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("oov_before,", 0) == 0) before = std::stoull(line.substr(11));
            if (line.rfind("oov_after,", 0) == 0) after = std::stoull(line.substr(10));
        }
        CHECK(after <= before);
    }

    SUBCASE("preprocess rerun is byte-identical") {
        cli::RunConfig again = config;
        again.out_dir = tmp.path("out2");
        cli::run_preprocess(again);
        CHECK(testutil::read_text(config.vocab_path()) ==
              testutil::read_text(again.vocab_path()));
        CHECK(testutil::read_text(config.corpus_path("train")) ==
              testutil::read_text(again.corpus_path("train")));
        CHECK(testutil::read_text(config.stats_path()) ==
              testutil::read_text(again.stats_path()));
    }

    cli::run_train(config);
    REQUIRE(std::filesystem::exists(config.model_path()));
    REQUIRE(std::filesystem::exists(config.history_path()));

    SUBCASE("history CSV has one row per epoch plus a header") {
        const std::string history = testutil::read_text(config.history_path());
        CHECK(history.rfind("epoch,train_loss,val_metric\n", 0) == 0);
        CHECK(std::count(history.begin(), history.end(), '\n') >= 2);
    }

    SUBCASE("train then eval on the overfit fixture reaches micro F1 = 1.0") {
        cli::run_eval(config);
        const std::string metrics = testutil::read_text(config.metrics_csv_path());
        std::istringstream lines(metrics);
        std::string line, micro_line;
        while (std::getline(lines, line)) {
            if (line.rfind("micro,", 0) == 0) micro_line = line;
        }
        REQUIRE_FALSE(micro_line.empty());
        // micro,<p>,<r>,<f1>,,
        std::istringstream fields(micro_line);
        std::string cell;
        std::getline(fields, cell, ',');
        std::getline(fields, cell, ',');
        std::getline(fields, cell, ',');
        std::getline(fields, cell, ',');
        CHECK(std::stod(cell) == doctest::Approx(1.0));
    }

    SUBCASE("predict on a single utterance writes one row with unit-sum probabilities") {
        testutil::write_text(tmp.path("single.txt"), corpus.dialogues[0].utterances[0] +
                                                         " __eou__\n");
        cli::RunConfig predict_config = config;
        predict_config.data_text_path = tmp.path("single.txt");
        predict_config.data_labels_path.clear();
        cli::run_predict(predict_config);

        const std::string out = testutil::read_text(predict_config.predictions_path());
        std::istringstream lines(out);
        std::string header, row, extra;
        REQUIRE(static_cast<bool>(std::getline(lines, header)));
        REQUIRE(static_cast<bool>(std::getline(lines, row)));
        CHECK_FALSE(static_cast<bool>(std::getline(lines, extra)));

        std::istringstream fields(row);
        std::string cell;
        for (int skip = 0; skip < 4; ++skip) std::getline(fields, cell, ',');
        double sum = 0.0;
        while (std::getline(fields, cell, ',')) sum += std::stod(cell);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("train rerun produces a byte-identical model file") {
        cli::RunConfig again = config;
        again.out_dir = tmp.path("out3");
        cli::run_preprocess(again);
        cli::run_train(again);
        CHECK(testutil::read_text(config.model_path()) ==
              testutil::read_text(again.model_path()));
    }
}

TEST_CASE("tune: surrogate history is monotone and reproducible") {
    testutil::TempDir tmp("cli_tune");
    const std::string config_text = fixture_config(tmp.path("out"), "unused", "unused");
    testutil::write_text(tmp.path("run.json"), config_text);
    cli::RunConfig config = cli::RunConfig::load(tmp.path("run.json"));

    cli::run_tune(config);
    REQUIRE(std::filesystem::exists(config.ga_history_path()));
    REQUIRE(std::filesystem::exists(config.best_chromosome_path()));
    REQUIRE(std::filesystem::exists(config.best_model_config_path()));

    const std::string history = testutil::read_text(config.ga_history_path());
    std::istringstream lines(history);
    std::string line;
    std::getline(lines, line);  // header
    CHECK(line ==
          "generation,best_fitness,mean_fitness,best_accuracy,best_params,chromosome_json");
    int rows = 0;
    double last_best = -1.0;
    while (std::getline(lines, line)) {
        ++rows;
        const auto comma = line.find(',');
        const auto comma2 = line.find(',', comma + 1);
        const double best = std::stod(line.substr(comma + 1, comma2 - comma - 1));
        CHECK(best >= last_best);
        last_best = best;
    }
    CHECK(rows == 10);

    SUBCASE("same seed, same bytes") {
        cli::RunConfig again = config;
        again.out_dir = tmp.path("out2");
        cli::run_tune(again);
        CHECK(testutil::read_text(config.ga_history_path()) ==
              testutil::read_text(again.ga_history_path()));
        CHECK(testutil::read_text(config.best_chromosome_path()) ==
              testutil::read_text(again.best_chromosome_path()));
    }

    SUBCASE("the best model config is loadable and within gene ranges") {
        const auto model_config =
            erc::config_from_json_text(testutil::read_text(config.best_model_config_path()));
        CHECK(model_config.hyper.batch_size >= 16);
        CHECK(model_config.hyper.batch_size <= 128);
        CHECK(model_config.attention_dim ==
              static_cast<std::size_t>(model_config.hyper.bilstm_hidden));
    }
}

TEST_CASE("mood: fit on labeled chat, predict windows, write the mood CSV") {
    testutil::TempDir tmp("cli_mood");
    const std::vector<std::string> names = {"joy", "rage"};
    Rng rng(31415);
    const auto chat = testutil::make_planted_chat(12, rng, names, {0}, {1}, 0.95);
    testutil::write_chat_csv_file(chat, names, tmp.path("chat.csv"));

    // train a model on the same messages via the pipeline
    std::ostringstream j;
    j << "{\n"
      << "  \"seed\": 777,\n"
      << "  \"out_dir\": \"" << tmp.path("out") << "\",\n"
      << "  \"labels\": {\"names\": [\"joy\", \"rage\"]},\n"
      << "  \"data\": {\"format\": \"chat_csv\", \"csv\": \"" << tmp.path("chat.csv")
      << "\", \"val_fraction\": 0.0, \"test_fraction\": 0.0, \"window_minutes\": 60},\n"
      << "  \"preprocess\": {\"vocab_size\": 400, \"max_seq_len\": 10, \"max_char_len\": 8},\n"
      << "  \"model\": {\"batch_size\": 4, \"epochs\": 50, \"word_emb_dim\": 10,\n"
      << "    \"char_emb_dim\": 5, \"char_lstm_hidden\": 6, \"bilstm_hidden\": 10,\n"
      << "    \"learning_rate\": 0.005, \"patience\": 8, \"metric\": \"accuracy\"},\n"
      << "  \"mood\": {\"window_minutes\": 60, \"k\": 2, \"fit_csv\": \"" << tmp.path("chat.csv")
      << "\"}\n"
      << "}\n";
    testutil::write_text(tmp.path("run.json"), j.str());
    const cli::RunConfig config = cli::RunConfig::load(tmp.path("run.json"));

    cli::run_preprocess(config);
    cli::run_train(config);
    cli::run_mood(config);

    REQUIRE(std::filesystem::exists(config.kmeans_path()));
    const std::string out = testutil::read_text(config.mood_csv_path());
    std::istringstream lines(out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "group_id,window_start,message_count,agg_joy,agg_rage,mood");
    int rows = 0, correct = 0;
    while (std::getline(lines, line)) {
        const bool good = line.find("GOOD") != std::string::npos;
        if ((chat.group_moods[static_cast<std::size_t>(rows)] == Mood::Good) == good) ++correct;
        ++rows;
    }
    CHECK(rows == static_cast<int>(chat.group_moods.size()));
    CHECK(correct == rows);  // planted polarity, overfit model

    SUBCASE("missing k-means file and no fit_csv is an error") {
        cli::RunConfig broken = config;
        broken.out_dir = tmp.path("out_missing");
        std::filesystem::create_directories(broken.out_dir);
        // model/vocab exist only in the original out dir
        CHECK_THROWS_AS(cli::run_mood(broken), InputError);
    }
}

TEST_CASE("config validation errors") {
    testutil::TempDir tmp("cli_cfg");
    SUBCASE("seed is mandatory") {
        testutil::write_text(tmp.path("bad.json"), "{\"out_dir\": \"x\"}");
        CHECK_THROWS_AS(cli::RunConfig::load(tmp.path("bad.json")), InputError);
    }
    SUBCASE("malformed JSON") {
        testutil::write_text(tmp.path("bad.json"), "{nope");
        CHECK_THROWS_AS(cli::RunConfig::load(tmp.path("bad.json")), InputError);
    }
    SUBCASE("unknown metric") {
        testutil::write_text(tmp.path("bad.json"),
                             "{\"seed\": 1, \"data\": {\"format\": \"dailydialog\", \"text\": "
                             "\"x\", \"labels\": \"y\"}, \"model\": {\"metric\": \"f2\"}}");
        const auto config = cli::RunConfig::load(tmp.path("bad.json"));
        CHECK_THROWS_AS(cli::run_train(config), InputError);
    }
    SUBCASE("empty corpus is an input error") {
        testutil::write_text(tmp.path("text.txt"), "");
        testutil::write_text(tmp.path("labels.txt"), "");
        testutil::write_text(
            tmp.path("run.json"),
            fixture_config(tmp.path("out"), tmp.path("text.txt"), tmp.path("labels.txt")));
        const auto config = cli::RunConfig::load(tmp.path("run.json"));
        CHECK_THROWS_AS(cli::run_preprocess(config), InputError);
    }
}

TEST_CASE("tune with the real evaluator completes at smoke scale") {
    testutil::TempDir tmp("cli_tune_real");
    Rng rng(606);
    const auto corpus =
        testutil::make_synthetic_corpus(10, rng, kLabels, {0.25, 0.25, 0.25, 0.25}, 0.95);
    testutil::write_dailydialog_files(corpus, tmp.path("text.txt"), tmp.path("labels.txt"));

    std::ostringstream j;
    j << "{\n"
      << "  \"seed\": 99,\n"
      << "  \"out_dir\": \"" << tmp.path("out") << "\",\n"
      << "  \"labels\": {\"names\": [\"calm\", \"joy\", \"rage\", \"gloom\"]},\n"
      << "  \"data\": {\"format\": \"dailydialog\", \"text\": \"" << tmp.path("text.txt")
      << "\", \"labels\": \"" << tmp.path("labels.txt")
      << "\", \"val_fraction\": 0.0, \"test_fraction\": 0.0},\n"
      << "  \"preprocess\": {\"vocab_size\": 300, \"max_seq_len\": 10, \"max_char_len\": 8},\n"
      << "  \"model\": {\"learning_rate\": 0.005, \"patience\": 2},\n"
      << "  \"ga\": {\"population_size\": 3, \"max_generations\": 2, \"evaluator\": \"real\",\n"
      << "    \"metric\": \"accuracy\",\n"
      << "    \"genes\": [\n"
      << "      {\"name\": \"batch_size\", \"kind\": \"discrete\", \"min\": 4, \"max\": 8},\n"
      << "      {\"name\": \"epochs\", \"kind\": \"discrete\", \"min\": 2, \"max\": 4},\n"
      << "      {\"name\": \"word_emb_dim\", \"kind\": \"discrete\", \"min\": 6, \"max\": 12},\n"
      << "      {\"name\": \"char_emb_dim\", \"kind\": \"discrete\", \"min\": 3, \"max\": 6},\n"
      << "      {\"name\": \"char_lstm_hidden\", \"kind\": \"discrete\", \"min\": 3, \"max\": "
         "6},\n"
      << "      {\"name\": \"spatial_dropout\", \"kind\": \"continuous\", \"min\": 0.0, "
         "\"max\": 0.3},\n"
      << "      {\"name\": \"lstm_dropout\", \"kind\": \"continuous\", \"min\": 0.0, \"max\": "
         "0.3},\n"
      << "      {\"name\": \"lstm_recurrent_dropout\", \"kind\": \"continuous\", \"min\": 0.0, "
         "\"max\": 0.3},\n"
      << "      {\"name\": \"bilstm_hidden\", \"kind\": \"discrete\", \"min\": 6, \"max\": "
         "12},\n"
      << "      {\"name\": \"bilstm_recurrent_dropout\", \"kind\": \"continuous\", \"min\": "
         "0.0, \"max\": 0.3}\n"
      << "    ]}\n"
      << "}\n";
    testutil::write_text(tmp.path("run.json"), j.str());
    const cli::RunConfig config = cli::RunConfig::load(tmp.path("run.json"));

    cli::run_preprocess(config);
    cli::run_tune(config);

    const std::string history = testutil::read_text(config.ga_history_path());
    CHECK(std::count(history.begin(), history.end(), '\n') == 3);  // header + 2 generations
    const std::string best = testutil::read_text(config.best_chromosome_path());
    CHECK(best.find("\"accuracy\"") != std::string::npos);
}

TEST_CASE("eval on a NaN-corrupted model exits with the numeric failure code") {
    testutil::TempDir tmp("cli_nan");
    Rng rng(17);
    const auto corpus = testutil::make_synthetic_corpus(8, rng, kLabels,
                                                        {0.25, 0.25, 0.25, 0.25});
    testutil::write_dailydialog_files(corpus, tmp.path("text.txt"), tmp.path("labels.txt"));
    testutil::write_text(
        tmp.path("run.json"),
        fixture_config(tmp.path("out"), tmp.path("text.txt"), tmp.path("labels.txt")));
    cli::RunConfig config = cli::RunConfig::load(tmp.path("run.json"));
    config.hyper.epochs = 1;
    cli::run_preprocess(config);
    cli::run_train(config);

    // poison the payload: every tensor value becomes NaN, the header survives
    std::string bytes = testutil::read_text(config.model_path());
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 8, sizeof(header_len));
    const std::size_t payload_start = 8 + sizeof(std::uint64_t) + header_len;
    const double nan_value = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t off = payload_start; off + sizeof(double) <= bytes.size();
         off += sizeof(double)) {
        std::memcpy(bytes.data() + off, &nan_value, sizeof(double));
    }
    testutil::write_text(config.model_path(), bytes);

    CHECK(run_binary("eval --config " + tmp.path("run.json")) == 3);
}

TEST_CASE("binary exit codes: 0 on success, 2 on input errors") {
    testutil::TempDir tmp("cli_exit");
    CHECK(run_binary("preprocess --config " + tmp.path("missing.json")) == 2);
    CHECK(run_binary("bogus-subcommand") == 2);
    CHECK(run_binary("--help") == 0);

    Rng rng(11);
    const auto corpus = testutil::make_synthetic_corpus(8, rng, kLabels,
                                                        {0.25, 0.25, 0.25, 0.25});
    testutil::write_dailydialog_files(corpus, tmp.path("text.txt"), tmp.path("labels.txt"));
    testutil::write_text(
        tmp.path("run.json"),
        fixture_config(tmp.path("out"), tmp.path("text.txt"), tmp.path("labels.txt")));
    CHECK(run_binary("preprocess --config " + tmp.path("run.json")) == 0);
    // train before preprocess in a fresh out dir: missing vocab -> 2
    CHECK(run_binary("train --config " + tmp.path("run.json") + " --out " +
                     tmp.path("fresh")) == 2);
}
