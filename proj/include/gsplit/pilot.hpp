#pragma once

// Pilot selection of a level schedule with conditional passage
// probabilities close to a target (by default 1/s). Each stage simulates a
// population at the current level, puts the next level at the upper
// target-quantile of the importance values, and stops once at least half
// the target fraction reaches the final level. The half keeps population
// noise from adding a short extra level just before the final one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/model.hpp"
#include "gsplit/random.hpp"
#include "gsplit/state.hpp"

namespace gsplit {

struct PilotConfig {
  /// Target passage probability; 0 means 1/s.
  double target_rho = 0.0;
  std::size_t population = 10'000;
  std::size_t max_levels = 50;
};

struct PilotReport {
  LevelSchedule schedule;
  /// Fraction of each stage's population that reached the chosen level.
  std::vector<double> rho_hat;
};

template <SplittingModel Model>
PilotReport pilot_levels(const Model& model, int split_factor, double gamma_final, Direction direction,
                         const PilotConfig& config, const SeedSequence& seeds) {
  const double rho = config.target_rho > 0.0 ? config.target_rho : 1.0 / split_factor;
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("pilot_levels: target rho must lie in (0, 1)");
  if (config.population < 100) throw InvalidArgument("pilot_levels: population must be >= 100");
  if (split_factor < 2) throw InvalidArgument("pilot_levels: splitting factor must be >= 2");

  const std::size_t pop = config.population;
  const std::size_t dim = model.dimension();
  const auto keep = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(pop)));
  const double final_canon = canonical_value(gamma_final, direction);

  std::vector<double> states(pop * dim);
  std::vector<double> scores(pop);
  auto row = [&](std::size_t i) { return std::span<double>(states.data() + i * dim, dim); };

  RandomStream rng = seeds.stream(StreamDomain::Pilot, 0);
  for (std::size_t i = 0; i < pop; ++i) {
    model.sample_f(rng, row(i));
    scores[i] = canonical_value(model.importance(row(i)), direction);
  }

  std::vector<double> levels;  // canonical
  std::vector<double> rho_hat;
  for (std::size_t stage = 0;; ++stage) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    // Lower empirical quantile: at least `keep` states reach the level.
    double level = sorted[keep - 1];
    const auto at_final = static_cast<std::size_t>(
        std::count_if(sorted.begin(), sorted.end(), [&](double v) { return v >= final_canon; }));
    const bool last = level >= final_canon || 2 * at_final >= keep;
    if (last) level = final_canon;
    if (!levels.empty() && !(level > levels.back())) {
      std::ostringstream os;
      os << "pilot_levels: stalled at level " << canonical_value(levels.back(), direction);
      throw ScheduleError(os.str());
    }
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < pop; ++i) {
      if (scores[i] >= level) survivors.push_back(i);
    }
    levels.push_back(level);
    rho_hat.push_back(static_cast<double>(survivors.size()) / static_cast<double>(pop));
    if (last) break;
    if (levels.size() >= config.max_levels) {
      std::ostringstream os;
      os << "pilot_levels: reached max_levels=" << config.max_levels << " before the final level; deepest level "
         << canonical_value(level, direction);
      throw ScheduleError(os.str());
    }

    // Next population: a chain from each survivor, each step one new state.
    const LevelConstraint support{canonical_value(level, direction), direction};
    std::vector<double> next(pop * dim);
    const std::size_t chains = survivors.size();
    std::size_t filled = 0;
    for (std::size_t c = 0; c < chains; ++c) {
      const std::size_t quota = pop / chains + (c < pop % chains ? 1 : 0);
      State work(row(survivors[c]).begin(), row(survivors[c]).end());
      for (std::size_t k = 0; k < quota; ++k, ++filled) {
        model.kernel_step(support, std::span<double>(work), rng);
        std::copy(work.begin(), work.end(), next.begin() + filled * dim);
      }
    }
    states.swap(next);
    for (std::size_t i = 0; i < pop; ++i) scores[i] = canonical_value(model.importance(row(i)), direction);
  }

  std::vector<double> raw(levels.size());
  std::transform(levels.begin(), levels.end(), raw.begin(), [&](double v) { return canonical_value(v, direction); });
  return {LevelSchedule(std::move(raw), split_factor, direction), std::move(rho_hat)};
}

}  // namespace gsplit
