#ifndef LEAPMOOD_GA_HPP
#define LEAPMOOD_GA_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "leapmood/erc.hpp"
#include "leapmood/rng.hpp"

namespace leapmood::ga {

enum class GeneKind { Continuous, Discrete };

struct GeneSpec {
    std::string name;
    GeneKind kind = GeneKind::Discrete;
    double min = 0.0;
    double max = 0.0;
    std::string owner;  // architecture component the gene belongs to
};

/// The 10 genes in published order. Ranges bracket every published value and
/// ship in the editable GA config.
std::vector<GeneSpec> default_gene_specs();

/// Gene values aligned with the spec table; discrete genes hold integral
/// values.
using Chromosome = std::vector<double>;

void validate_chromosome(const Chromosome& genes, const std::vector<GeneSpec>& specs);

/// Chromosome -> the full model config used for parameter counting and
/// training; attention_dim follows bilstm_hidden.
erc::ModelConfig chromosome_to_config(const Chromosome& genes,
                                      const std::vector<GeneSpec>& specs,
                                      const erc::ModelConfig& base);

struct FitnessRecord {
    Chromosome chromosome;
    double accuracy = 0.0;
    std::uint64_t total_params = 0;
    double fitness = 0.0;  // accuracy / total_params
};

/// Accuracy oracle behind the fitness ratio. Implementations must be
/// deterministic given (generation, slot); results land in [0, 1].
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual double evaluate(const Chromosome& genes, std::uint64_t generation,
                            std::uint64_t slot) = 0;
};

/// Closed-form benchmark with a unique known optimum gene vector: accuracy
/// is proportional to count_params times a product of per-gene bumps peaked
/// at the target, so fitness = accuracy/params cancels the size term and the
/// optimum fitness is known exactly.
class SurrogateEvaluator : public Evaluator {
public:
    SurrogateEvaluator(std::vector<GeneSpec> specs, erc::ModelConfig base,
                       Chromosome target, double width = 0.25);

    double evaluate(const Chromosome& genes, std::uint64_t generation,
                    std::uint64_t slot) override;

    double optimum_fitness() const { return scale_; }
    const Chromosome& optimum_genes() const { return target_; }

private:
    std::vector<GeneSpec> specs_;
    erc::ModelConfig base_;
    Chromosome target_;
    double width_;
    double scale_;
};

/// Trains the real model on a fixed split; accuracy is the best validation
/// metric. The RNG stream is derived from (seed, generation, slot) so
/// parallel waves are schedule-independent.
class TrainingEvaluator : public Evaluator {
public:
    TrainingEvaluator(const std::vector<EncodedDialogue>* train_data,
                      const std::vector<EncodedDialogue>* val_data, erc::ModelConfig base,
                      std::vector<GeneSpec> specs, erc::TrainOptions options,
                      std::uint64_t seed);

    double evaluate(const Chromosome& genes, std::uint64_t generation,
                    std::uint64_t slot) override;

private:
    const std::vector<EncodedDialogue>* train_data_;
    const std::vector<EncodedDialogue>* val_data_;
    erc::ModelConfig base_;
    std::vector<GeneSpec> specs_;
    erc::TrainOptions options_;
    std::uint64_t seed_;
};

struct GaConfig {
    int population_size = 7;
    double crossover_rate = 0.5;
    double mutation_rate = 0.25;
    int max_generations = 250;
    std::uint64_t seed = 0;
    int elitism_count = 1;
    int threads = 1;  // parallel fitness evaluation within a generation

    void validate() const;
};

struct GenerationStats {
    int generation = 0;
    FitnessRecord best;
    double mean_fitness = 0.0;
};

struct GaResult {
    FitnessRecord best;
    std::vector<GenerationStats> history;
};

/// Thrown when an evaluator fails mid-run; carries the history so far.
struct GaAborted : std::runtime_error {
    GaAborted(const std::string& msg, std::vector<GenerationStats> partial)
        : std::runtime_error(msg), history(std::move(partial)) {}
    std::vector<GenerationStats> history;
};

using Population = std::vector<Chromosome>;

/// Discrete genes uniform over the integer range, continuous uniform over
/// the real range.
Population init_population(const std::vector<GeneSpec>& specs, const GaConfig& config, Rng& rng);

/// Fitness = accuracy / count_params; evaluations are cached by exact gene
/// values, so re-seeing a chromosome never calls the evaluator again.
class FitnessCache {
public:
    explicit FitnessCache(const std::vector<GeneSpec>* specs, const erc::ModelConfig* base,
                          Evaluator* evaluator)
        : specs_(specs), base_(base), evaluator_(evaluator) {}

    FitnessRecord fitness(const Chromosome& genes, std::uint64_t generation, std::uint64_t slot);
    bool contains(const Chromosome& genes) const;
    std::size_t evaluation_count() const { return evaluations_; }

    /// One generation's worth of lookups; misses are deduplicated and
    /// evaluated (optionally in OpenMP parallel), committed in slot order.
    std::vector<FitnessRecord> evaluate_wave_serial(const Population& population,
                                                    std::uint64_t generation);
    std::vector<FitnessRecord> evaluate_wave_parallel(const Population& population,
                                                      std::uint64_t generation, int threads);

private:
    static std::string key_of(const Chromosome& genes);

    const std::vector<GeneSpec>* specs_;
    const erc::ModelConfig* base_;
    Evaluator* evaluator_;
    std::map<std::string, std::pair<double, std::uint64_t>> cache_;  // key -> (acc, params)
    std::size_t evaluations_ = 0;
};

/// Normalized selection shares; requires at least one positive fitness.
std::vector<double> roulette_areas(const std::vector<FitnessRecord>& records);

/// Samples one parent with probability proportional to fitness. Throws when
/// every fitness is zero; the caller decides on a fallback explicitly.
const Chromosome& roulette_select(const std::vector<FitnessRecord>& records, Rng& rng);

/// Crossover point k uniform in {1..size-1}; children swap gene suffixes.
std::pair<Chromosome, Chromosome> one_point_crossover(const Chromosome& parent_a,
                                                      const Chromosome& parent_b, Rng& rng);

/// Re-samples round(size * mutation_rate) distinct positions (ties toward
/// floor) uniformly within their spec ranges.
Chromosome mutate(const Chromosome& genes, const std::vector<GeneSpec>& specs,
                  const GaConfig& config, Rng& rng);

/// Number of genes mutate() rewrites for this config.
int mutation_gene_count(std::size_t chromosome_size, double mutation_rate);

/// The full generational loop: evaluate, record, elitism, roulette parents,
/// floor(population * crossover_rate) crossover operations, top-up with
/// selected parents, mutate non-elites, repeat for max_generations.
GaResult run_ga(const GaConfig& config, const std::vector<GeneSpec>& specs,
                const erc::ModelConfig& base, Evaluator& evaluator);

}  // namespace leapmood::ga

#endif
