#include "leapmood/mood.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "leapmood/common.hpp"
#include "leapmood/parallel.hpp"
#include "leapmood/rng.hpp"

namespace leapmood::mood {

std::vector<double> aggregate_logits(const std::vector<std::vector<double>>& logits) {
    if (logits.empty()) throw InputError("aggregate_logits: empty group");
    const std::size_t m = logits.front().size();
    std::vector<double> sum(m, 0.0);
    for (const auto& row : logits) {
        if (row.size() != m) throw InputError("aggregate_logits: vector length mismatch");
        for (std::size_t j = 0; j < m; ++j) sum[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(logits.size());
    for (double& v : sum) v *= inv;
    return sum;
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

int nearest_index(const std::vector<double>& point,
                  const std::vector<std::vector<double>>& centroids) {
    std::size_t best = 0;
    double best_d = squared_distance(point, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = squared_distance(point, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return static_cast<int>(best);
}

}  // namespace

void assign_points_serial(const std::vector<std::vector<double>>& points,
                          const std::vector<std::vector<double>>& centroids,
                          std::vector<int>& assignments) {
    if (centroids.empty()) throw InputError("assign_points: no centroids");
    assignments.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        assignments[i] = nearest_index(points[i], centroids);
    }
}

void assign_points_parallel(const std::vector<std::vector<double>>& points,
                            const std::vector<std::vector<double>>& centroids,
                            std::vector<int>& assignments, int threads) {
    if (centroids.empty()) throw InputError("assign_points: no centroids");
    assignments.resize(points.size());
    const int n_threads = effective_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(n_threads)
#endif
    for (std::size_t i = 0; i < points.size(); ++i) {
        assignments[i] = nearest_index(points[i], centroids);
    }
    (void)n_threads;
}

KMeansModel kmeans_fit(const std::vector<std::vector<double>>& points, std::size_t k,
                       std::uint64_t seed, int max_iters, double tol, int threads) {
    if (k < 1) throw InputError("kmeans_fit: k must be >= 1");
    if (points.size() < k) {
        throw InputError("kmeans_fit: " + std::to_string(points.size()) + " points for k = " +
                         std::to_string(k));
    }
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw InputError("kmeans_fit: point dimension mismatch");
    }

    Rng rng(seed);
    KMeansModel model;
    model.seed = seed;
    model.centroids.reserve(k);

    // k-means++ seeding
    model.centroids.push_back(
        points[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(points.size()) - 1))]);
    std::vector<double> dist2(points.size());
    while (model.centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : model.centroids) {
                best = std::min(best, squared_distance(points[i], c));
            }
            dist2[i] = best;
            total += best;
        }
        std::size_t chosen;
        if (total <= 0.0) {
            // all remaining mass is on existing centroids (duplicate points)
            chosen = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(points.size()) - 1));
        } else {
            const double r = rng.next_double() * total;
            double cum = 0.0;
            chosen = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                cum += dist2[i];
                if (r < cum) {
                    chosen = i;
                    break;
                }
            }
        }
        model.centroids.push_back(points[chosen]);
    }

    // Lloyd iterations
    model.assignments.assign(points.size(), 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        if (threads > 1) {
            assign_points_parallel(points, model.centroids, model.assignments, threads);
        } else {
            assign_points_serial(points, model.centroids, model.assignments);
        }

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(model.assignments[i]);
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> updated;
            if (counts[c] == 0) {
                // re-seed an empty cluster at the farthest point
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double d = squared_distance(
                        points[i], model.centroids[static_cast<std::size_t>(model.assignments[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                updated = points[far];
            } else {
                updated = sums[c];
                for (double& v : updated) v /= static_cast<double>(counts[c]);
            }
            shift += squared_distance(model.centroids[c], updated);
            model.centroids[c] = std::move(updated);
        }
        if (shift < tol) break;
    }

    // final assignment + inertia against the converged centroids
    if (threads > 1) {
        assign_points_parallel(points, model.centroids, model.assignments, threads);
    } else {
        assign_points_serial(points, model.centroids, model.assignments);
    }
    model.inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        model.inertia += squared_distance(
            points[i], model.centroids[static_cast<std::size_t>(model.assignments[i])]);
    }
    return model;
}

std::size_t nearest_centroid(const KMeansModel& model, const std::vector<double>& point) {
    if (model.centroids.empty()) throw InputError("nearest_centroid: unfitted model");
    std::size_t best = 0;
    double best_d = squared_distance(point, model.centroids[0]);
    for (std::size_t c = 1; c < model.centroids.size(); ++c) {
        const double d = squared_distance(point, model.centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<Mood> label_clusters(const KMeansModel& model, const std::map<int, int>& polarity) {
    if (model.centroids.empty()) throw InputError("label_clusters: unfitted model");
    const std::size_t dim = model.centroids.front().size();
    for (std::size_t lab = 0; lab < dim; ++lab) {
        if (!polarity.count(static_cast<int>(lab))) {
            throw InputError("label_clusters: polarity map is missing label id " +
                             std::to_string(lab));
        }
    }

    std::vector<double> scores(model.centroids.size(), 0.0);
    for (std::size_t c = 0; c < model.centroids.size(); ++c) {
        for (std::size_t lab = 0; lab < dim; ++lab) {
            scores[c] += static_cast<double>(polarity.at(static_cast<int>(lab))) *
                         model.centroids[c][lab];
        }
    }

    // GOOD only for a strict unique maximum; ties fall to BAD
    std::vector<Mood> moods(model.centroids.size(), Mood::Bad);
    for (std::size_t c = 0; c < model.centroids.size(); ++c) {
        bool strictly_best = true;
        for (std::size_t o = 0; o < model.centroids.size(); ++o) {
            if (o != c && scores[o] >= scores[c]) {
                strictly_best = false;
                break;
            }
        }
        if (strictly_best) moods[c] = Mood::Good;
    }
    return moods;
}

EncodedDialogue EncoderContext::encode_group(const MoodGroup& group) const {
    EncodedDialogue dlg;
    dlg.utterances.reserve(group.messages.size());
    for (const ChatMessage& msg : group.messages) {
        dlg.utterances.push_back(
            encode_text(msg.text, *acronyms, *vocab, *cvocab, max_seq_len, max_char_len));
        if (msg.emotion_label) dlg.labels.push_back(*msg.emotion_label);
    }
    if (dlg.labels.size() != dlg.utterances.size()) dlg.labels.clear();  // partially labeled
    return dlg;
}

std::vector<double> group_aggregate(const MoodGroup& group, const EncoderContext& encoder,
                                    const erc::TrainedModel& model) {
    if (group.messages.empty()) throw InputError("predict_mood: empty group");
    const EncodedDialogue dlg = encoder.encode_group(group);
    const erc::Prediction pred = erc::predict(model, dlg);
    return aggregate_logits(pred.logits);
}

Mood predict_mood(const MoodGroup& group, const EncoderContext& encoder,
                  const erc::TrainedModel& model, const KMeansModel& km) {
    if (km.cluster_to_mood.size() != km.centroids.size()) {
        throw InputError("predict_mood: k-means clusters are not mood-labeled");
    }
    const std::vector<double> agg = group_aggregate(group, encoder, model);
    return km.cluster_to_mood[nearest_centroid(km, agg)];
}

void save_kmeans(const KMeansModel& model, const std::map<int, int>& polarity,
                 const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["k"] = model.centroids.size();
    j["seed"] = model.seed;
    j["inertia"] = model.inertia;
    j["centroids"] = model.centroids;
    nlohmann::json moods = nlohmann::json::array();
    for (Mood m : model.cluster_to_mood) moods.push_back(mood_name(m));
    j["cluster_to_mood"] = moods;
    nlohmann::json pol = nlohmann::json::object();
    for (const auto& [label, sign] : polarity) pol[std::to_string(label)] = sign;
    j["polarity"] = pol;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write k-means file: " + path);
    out << j.dump(2) << "\n";
}

KMeansModel load_kmeans(const std::string& path, std::map<int, int>* polarity_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open k-means file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("k-means file " + path + ": " + e.what());
    }
    if (j.value("format_version", 0) != 1) {
        throw InputError("k-means file has unsupported format version: " + path);
    }
    KMeansModel model;
    model.seed = j.at("seed").get<std::uint64_t>();
    model.inertia = j.at("inertia").get<double>();
    model.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    for (const auto& name : j.at("cluster_to_mood")) {
        const std::string s = name.get<std::string>();
        if (s != "GOOD" && s != "BAD") throw InputError("k-means file: bad mood label " + s);
        model.cluster_to_mood.push_back(s == "GOOD" ? Mood::Good : Mood::Bad);
    }
    if (polarity_out) {
        polarity_out->clear();
        for (auto it = j.at("polarity").begin(); it != j.at("polarity").end(); ++it) {
            (*polarity_out)[std::stoi(it.key())] = it.value().get<int>();
        }
    }
    return model;
}

}  // namespace leapmood::mood
