#include "leapmood/ga.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "leapmood/common.hpp"
#include "leapmood/parallel.hpp"

namespace leapmood::ga {

std::vector<GeneSpec> default_gene_specs() {
    return {
        {"batch_size", GeneKind::Discrete, 16, 128, "training"},
        {"epochs", GeneKind::Discrete, 5, 50, "training"},
        {"word_emb_dim", GeneKind::Discrete, 16, 128, "word_embedding"},
        {"char_emb_dim", GeneKind::Discrete, 8, 32, "char_embedding"},
        {"char_lstm_hidden", GeneKind::Discrete, 8, 64, "char_lstm"},
        {"spatial_dropout", GeneKind::Continuous, 0.0, 0.5, "embedding"},
        {"lstm_dropout", GeneKind::Continuous, 0.0, 0.5, "char_lstm"},
        {"lstm_recurrent_dropout", GeneKind::Continuous, 0.0, 0.5, "char_lstm"},
        {"bilstm_hidden", GeneKind::Discrete, 16, 128, "bilstm"},
        {"bilstm_recurrent_dropout", GeneKind::Continuous, 0.0, 0.5, "bilstm"},
    };
}

void validate_chromosome(const Chromosome& genes, const std::vector<GeneSpec>& specs) {
    if (genes.size() != specs.size()) {
        throw InputError("chromosome has " + std::to_string(genes.size()) + " genes, expected " +
                         std::to_string(specs.size()));
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const GeneSpec& spec = specs[i];
        const double v = genes[i];
        if (v < spec.min || v > spec.max) {
            throw InputError("gene '" + spec.name + "' out of range: " + std::to_string(v));
        }
        if (spec.kind == GeneKind::Discrete && v != std::floor(v)) {
            throw InputError("gene '" + spec.name + "' must be integral: " + std::to_string(v));
        }
    }
}

erc::ModelConfig chromosome_to_config(const Chromosome& genes,
                                      const std::vector<GeneSpec>& specs,
                                      const erc::ModelConfig& base) {
    validate_chromosome(genes, specs);
    erc::ModelConfig config = base;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const std::string& name = specs[i].name;
        const double v = genes[i];
        if (name == "batch_size") config.hyper.batch_size = static_cast<int>(v);
        else if (name == "epochs") config.hyper.epochs = static_cast<int>(v);
        else if (name == "word_emb_dim") config.hyper.word_emb_dim = static_cast<int>(v);
        else if (name == "char_emb_dim") config.hyper.char_emb_dim = static_cast<int>(v);
        else if (name == "char_lstm_hidden") config.hyper.char_lstm_hidden = static_cast<int>(v);
        else if (name == "spatial_dropout") config.hyper.spatial_dropout = v;
        else if (name == "lstm_dropout") config.hyper.lstm_dropout = v;
        else if (name == "lstm_recurrent_dropout") config.hyper.lstm_recurrent_dropout = v;
        else if (name == "bilstm_hidden") config.hyper.bilstm_hidden = static_cast<int>(v);
        else if (name == "bilstm_recurrent_dropout") config.hyper.bilstm_recurrent_dropout = v;
        else throw InputError("unknown gene name: " + name);
    }
    config.attention_dim = static_cast<std::size_t>(config.hyper.bilstm_hidden);
    return config;
}

// ---------------------------------------------------------------------------
// Evaluators
// ---------------------------------------------------------------------------

SurrogateEvaluator::SurrogateEvaluator(std::vector<GeneSpec> specs, erc::ModelConfig base,
                                       Chromosome target, double width)
    : specs_(std::move(specs)), base_(std::move(base)), target_(std::move(target)),
      width_(width) {
    validate_chromosome(target_, specs_);
    Chromosome maxed;
    maxed.reserve(specs_.size());
    for (const GeneSpec& spec : specs_) maxed.push_back(spec.max);
    const auto max_params = erc::count_params(chromosome_to_config(maxed, specs_, base_)).total;
    scale_ = 1.0 / static_cast<double>(max_params);
}

double SurrogateEvaluator::evaluate(const Chromosome& genes, std::uint64_t generation,
                                    std::uint64_t slot) {
    (void)generation;
    (void)slot;
    double bump = 1.0;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const double range = specs_[i].max - specs_[i].min;
        const double rel = (genes[i] - target_[i]) / range;
        bump *= 1.0 - width_ * rel * rel;
    }
    const auto params = erc::count_params(chromosome_to_config(genes, specs_, base_)).total;
    const double accuracy = scale_ * static_cast<double>(params) * bump;
    return std::clamp(accuracy, 0.0, 1.0);
}

TrainingEvaluator::TrainingEvaluator(const std::vector<EncodedDialogue>* train_data,
                                     const std::vector<EncodedDialogue>* val_data,
                                     erc::ModelConfig base, std::vector<GeneSpec> specs,
                                     erc::TrainOptions options, std::uint64_t seed)
    : train_data_(train_data), val_data_(val_data), base_(std::move(base)),
      specs_(std::move(specs)), options_(std::move(options)), seed_(seed) {}

double TrainingEvaluator::evaluate(const Chromosome& genes, std::uint64_t generation,
                                   std::uint64_t slot) {
    const erc::ModelConfig config = chromosome_to_config(genes, specs_, base_);
    Rng rng = Rng::stream(seed_, generation, slot);
    const erc::TrainedModel model = erc::train(*train_data_, *val_data_, config, options_, rng);
    return model.best_val_metric;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

void GaConfig::validate() const {
    if (population_size < 2) throw InputError("GA population_size must be >= 2");
    if (crossover_rate < 0.0 || crossover_rate > 1.0) {
        throw InputError("GA crossover_rate must be in [0, 1]");
    }
    if (mutation_rate < 0.0 || mutation_rate > 1.0) {
        throw InputError("GA mutation_rate must be in [0, 1]");
    }
    if (max_generations < 1) throw InputError("GA max_generations must be >= 1");
    if (elitism_count < 0 || elitism_count >= population_size) {
        throw InputError("GA elitism_count must be in [0, population_size)");
    }
}

Population init_population(const std::vector<GeneSpec>& specs, const GaConfig& config, Rng& rng) {
    Population population;
    population.reserve(static_cast<std::size_t>(config.population_size));
    for (int i = 0; i < config.population_size; ++i) {
        Chromosome genes;
        genes.reserve(specs.size());
        for (const GeneSpec& spec : specs) {
            if (spec.kind == GeneKind::Discrete) {
                genes.push_back(static_cast<double>(rng.uniform_int(
                    static_cast<std::int64_t>(spec.min), static_cast<std::int64_t>(spec.max))));
            } else {
                genes.push_back(rng.uniform(spec.min, spec.max));
            }
        }
        population.push_back(std::move(genes));
    }
    return population;
}

namespace {

std::string chromosome_json(const Chromosome& genes) {
    std::string out = "[";
    for (std::size_t i = 0; i < genes.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(genes[i]);
    }
    return out + "]";
}

}  // namespace

std::string FitnessCache::key_of(const Chromosome& genes) {
    std::string key(genes.size() * sizeof(double), '\0');
    std::memcpy(key.data(), genes.data(), key.size());
    return key;
}

bool FitnessCache::contains(const Chromosome& genes) const {
    return cache_.count(key_of(genes)) > 0;
}

FitnessRecord FitnessCache::fitness(const Chromosome& genes, std::uint64_t generation,
                                    std::uint64_t slot) {
    validate_chromosome(genes, *specs_);
    const std::string key = key_of(genes);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        const auto params = erc::count_params(chromosome_to_config(genes, *specs_, *base_)).total;
        double accuracy;
        try {
            accuracy = evaluator_->evaluate(genes, generation, slot);
        } catch (const std::exception& e) {
            throw InputError(std::string("fitness evaluation failed: ") + e.what() +
                             " (chromosome " + chromosome_json(genes) + ")");
        }
        if (accuracy < 0.0 || accuracy > 1.0) {
            throw NumericError("evaluator returned accuracy outside [0, 1]: " +
                               std::to_string(accuracy));
        }
        ++evaluations_;
        it = cache_.emplace(key, std::make_pair(accuracy, params)).first;
    }
    FitnessRecord record;
    record.chromosome = genes;
    record.accuracy = it->second.first;
    record.total_params = it->second.second;
    record.fitness = record.accuracy / static_cast<double>(record.total_params);
    return record;
}

std::vector<FitnessRecord> FitnessCache::evaluate_wave_serial(const Population& population,
                                                              std::uint64_t generation) {
    std::vector<FitnessRecord> records;
    records.reserve(population.size());
    for (std::size_t slot = 0; slot < population.size(); ++slot) {
        records.push_back(fitness(population[slot], generation, slot));
    }
    return records;
}

std::vector<FitnessRecord> FitnessCache::evaluate_wave_parallel(const Population& population,
                                                                std::uint64_t generation,
                                                                int threads) {
    // dedupe misses, keeping the first slot index of each chromosome so the
    // evaluator sees the same (generation, slot) pair the serial wave would
    std::vector<std::size_t> miss_slots;
    std::map<std::string, std::size_t> seen;
    for (std::size_t slot = 0; slot < population.size(); ++slot) {
        const std::string key = key_of(population[slot]);
        if (cache_.count(key) || seen.count(key)) continue;
        seen.emplace(key, slot);
        miss_slots.push_back(slot);
    }

    std::vector<double> results(miss_slots.size(), 0.0);
    std::vector<std::string> errors(miss_slots.size());
    const int n_threads = effective_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(n_threads)
#endif
    for (std::size_t m = 0; m < miss_slots.size(); ++m) {
        const std::size_t slot = miss_slots[m];
        try {
            results[m] = evaluator_->evaluate(population[slot], generation, slot);
        } catch (const std::exception& e) {
            errors[m] = e.what();
        }
    }
    (void)n_threads;

    // commit in slot order; results are independent of the schedule
    for (std::size_t m = 0; m < miss_slots.size(); ++m) {
        const std::size_t slot = miss_slots[m];
        if (!errors[m].empty()) {
            throw InputError("fitness evaluation failed: " + errors[m] + " (chromosome " +
                             chromosome_json(population[slot]) + ")");
        }
        if (results[m] < 0.0 || results[m] > 1.0) {
            throw NumericError("evaluator returned accuracy outside [0, 1]: " +
                               std::to_string(results[m]));
        }
        const auto params =
            erc::count_params(chromosome_to_config(population[slot], *specs_, *base_)).total;
        cache_.emplace(key_of(population[slot]), std::make_pair(results[m], params));
        ++evaluations_;
    }

    std::vector<FitnessRecord> records;
    records.reserve(population.size());
    for (std::size_t slot = 0; slot < population.size(); ++slot) {
        records.push_back(fitness(population[slot], generation, slot));
    }
    return records;
}

std::vector<double> roulette_areas(const std::vector<FitnessRecord>& records) {
    if (records.empty()) throw InputError("roulette_areas: empty population");
    double total = 0.0;
    for (const auto& r : records) {
        if (r.fitness < 0.0) throw InputError("roulette_areas: negative fitness");
        total += r.fitness;
    }
    if (total <= 0.0) {
        throw InputError("roulette_areas: all fitness values are zero; caller must decide on a "
                         "uniform fallback explicitly");
    }
    std::vector<double> areas(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) areas[i] = records[i].fitness / total;
    return areas;
}

const Chromosome& roulette_select(const std::vector<FitnessRecord>& records, Rng& rng) {
    const std::vector<double> areas = roulette_areas(records);
    const double r = rng.next_double();
    double cum = 0.0;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        cum += areas[i];
        if (r < cum) return records[i].chromosome;
    }
    return records.back().chromosome;  // guard against fp undershoot
}

std::pair<Chromosome, Chromosome> one_point_crossover(const Chromosome& parent_a,
                                                      const Chromosome& parent_b, Rng& rng) {
    if (parent_a.size() != parent_b.size() || parent_a.size() < 2) {
        throw InputError("one_point_crossover: parents must share a size >= 2");
    }
    const auto k = static_cast<std::size_t>(
        rng.uniform_int(1, static_cast<std::int64_t>(parent_a.size()) - 1));
    Chromosome child_a = parent_a;
    Chromosome child_b = parent_b;
    for (std::size_t i = k; i < parent_a.size(); ++i) std::swap(child_a[i], child_b[i]);
    return {std::move(child_a), std::move(child_b)};
}

int mutation_gene_count(std::size_t chromosome_size, double mutation_rate) {
    const double x = static_cast<double>(chromosome_size) * mutation_rate;
    int m = static_cast<int>(std::floor(x));
    if (x - std::floor(x) > 0.5) ++m;  // exact .5 rounds down
    return std::min(m, static_cast<int>(chromosome_size));
}

Chromosome mutate(const Chromosome& genes, const std::vector<GeneSpec>& specs,
                  const GaConfig& config, Rng& rng) {
    const int count = mutation_gene_count(genes.size(), config.mutation_rate);
    Chromosome out = genes;
    if (count == 0) return out;

    std::vector<std::size_t> positions(genes.size());
    std::iota(positions.begin(), positions.end(), 0);
    for (int pick = 0; pick < count; ++pick) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(
            pick, static_cast<std::int64_t>(positions.size()) - 1));
        std::swap(positions[static_cast<std::size_t>(pick)], positions[j]);
        const std::size_t pos = positions[static_cast<std::size_t>(pick)];
        const GeneSpec& spec = specs[pos];
        if (spec.kind == GeneKind::Discrete) {
            out[pos] = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(spec.min),
                                                           static_cast<std::int64_t>(spec.max)));
        } else {
            out[pos] = rng.uniform(spec.min, spec.max);
        }
    }
    return out;
}

GaResult run_ga(const GaConfig& config, const std::vector<GeneSpec>& specs,
                const erc::ModelConfig& base, Evaluator& evaluator) {
    config.validate();
    if (specs.size() < 2) throw InputError("run_ga: need at least 2 genes");

    Rng rng(config.seed);
    Population population = init_population(specs, config, rng);
    FitnessCache cache(&specs, &base, &evaluator);

    GaResult result;
    for (int gen = 1; gen <= config.max_generations; ++gen) {
        std::vector<FitnessRecord> records;
        try {
            records = (config.threads > 1)
                          ? cache.evaluate_wave_parallel(population,
                                                         static_cast<std::uint64_t>(gen),
                                                         config.threads)
                          : cache.evaluate_wave_serial(population,
                                                       static_cast<std::uint64_t>(gen));
        } catch (const std::exception& e) {
            throw GaAborted(e.what(), std::move(result.history));
        }

        // rank indices by fitness desc, index asc (deterministic ties)
        std::vector<std::size_t> ranked(records.size());
        std::iota(ranked.begin(), ranked.end(), 0);
        std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            return records[a].fitness > records[b].fitness;
        });

        GenerationStats stats;
        stats.generation = gen;
        stats.best = records[ranked[0]];
        double sum = 0.0;
        for (const auto& r : records) sum += r.fitness;
        stats.mean_fitness = sum / static_cast<double>(records.size());
        result.history.push_back(stats);

        const bool all_zero = records[ranked[0]].fitness <= 0.0;
        auto select_parent = [&]() -> const Chromosome& {
            if (all_zero) {
                // documented uniform fallback; roulette_select refuses this case
                const auto i = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(records.size()) - 1));
                return records[i].chromosome;
            }
            return roulette_select(records, rng);
        };

        Population next;
        next.reserve(static_cast<std::size_t>(config.population_size));
        for (int e = 0; e < config.elitism_count; ++e) {
            next.push_back(records[ranked[static_cast<std::size_t>(e)]].chromosome);
        }

        const std::size_t open_slots =
            static_cast<std::size_t>(config.population_size) - next.size();
        const int crossover_ops =
            static_cast<int>(std::floor(config.population_size * config.crossover_rate));
        Population offspring;
        offspring.reserve(open_slots);
        for (int op = 0; op < crossover_ops && offspring.size() < open_slots; ++op) {
            const Chromosome parent_a = select_parent();
            const Chromosome parent_b = select_parent();
            auto [child_a, child_b] = one_point_crossover(parent_a, parent_b, rng);
            offspring.push_back(std::move(child_a));
            if (offspring.size() < open_slots) offspring.push_back(std::move(child_b));
        }
        while (offspring.size() < open_slots) offspring.push_back(select_parent());

        for (Chromosome& child : offspring) {
            next.push_back(mutate(child, specs, config, rng));
        }
        population = std::move(next);
    }

    // overall best is the last generation's recorded best: elitism makes the
    // per-generation best non-decreasing
    result.best = result.history.back().best;
    for (const auto& stats : result.history) {
        if (stats.best.fitness > result.best.fitness) result.best = stats.best;
    }
    return result;
}

}  // namespace leapmood::ga
