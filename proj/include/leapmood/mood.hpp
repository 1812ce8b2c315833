#ifndef LEAPMOOD_MOOD_HPP
#define LEAPMOOD_MOOD_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "leapmood/corpus.hpp"
#include "leapmood/encode.hpp"
#include "leapmood/erc.hpp"

namespace leapmood::mood {

/// Component-wise mean of per-message emotion probability vectors.
std::vector<double> aggregate_logits(const std::vector<std::vector<double>>& logits);

struct KMeansModel {
    std::vector<std::vector<double>> centroids;  // k x m
    std::vector<int> assignments;                // training point -> cluster
    double inertia = 0.0;
    std::vector<Mood> cluster_to_mood;           // empty until label_clusters
    std::uint64_t seed = 0;
};

/// Nearest-centroid assignment for every point (ties to the lowest cluster
/// id). Pure per-point work: the OpenMP variant matches the serial reference
/// bit for bit, which the tests assert and the benchmark target times.
void assign_points_serial(const std::vector<std::vector<double>>& points,
                          const std::vector<std::vector<double>>& centroids,
                          std::vector<int>& assignments);
void assign_points_parallel(const std::vector<std::vector<double>>& points,
                            const std::vector<std::vector<double>>& centroids,
                            std::vector<int>& assignments, int threads);

/// k-means++ seeding + Lloyd iterations until the total centroid shift drops
/// below tol or max_iters. Empty clusters are repaired by re-seeding to the
/// point farthest from its assigned centroid. threads > 1 runs the
/// assignment step in parallel; results are identical either way.
KMeansModel kmeans_fit(const std::vector<std::vector<double>>& points, std::size_t k,
                       std::uint64_t seed, int max_iters = 100, double tol = 1e-6,
                       int threads = 1);

/// Nearest centroid under squared Euclidean distance; ties go to the lowest
/// cluster id.
std::size_t nearest_centroid(const KMeansModel& model, const std::vector<double>& point);

/// Scores each centroid by sum_label polarity[label] * centroid[label]; the
/// strictly highest-scoring cluster is GOOD, everything else (ties included)
/// is BAD. The polarity map must cover every label id.
std::vector<Mood> label_clusters(const KMeansModel& model, const std::map<int, int>& polarity);

/// Per-message text preprocessing context the mood pipeline encodes with.
struct EncoderContext {
    const Vocab* vocab = nullptr;
    const CharVocab* cvocab = nullptr;
    const AcronymMap* acronyms = nullptr;
    std::size_t max_seq_len = 100;
    std::size_t max_char_len = 10;

    EncodedDialogue encode_group(const MoodGroup& group) const;
};

/// encode -> erc::predict -> aggregate -> nearest centroid -> cluster mood.
Mood predict_mood(const MoodGroup& group, const EncoderContext& encoder,
                  const erc::TrainedModel& model, const KMeansModel& km);

/// Aggregate vector for a group (the Eq. 1 half of predict_mood).
std::vector<double> group_aggregate(const MoodGroup& group, const EncoderContext& encoder,
                                    const erc::TrainedModel& model);

void save_kmeans(const KMeansModel& model, const std::map<int, int>& polarity,
                 const std::string& path);
KMeansModel load_kmeans(const std::string& path, std::map<int, int>* polarity_out = nullptr);

}  // namespace leapmood::mood

#endif
