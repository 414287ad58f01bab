#pragma once

#include "lmkg/kg_store.hpp"
#include "lmkg/rng.hpp"

#include <cstdint>
#include <vector>

namespace lmkg {

/// Draws indices in [0, n) with P(i) proportional to 1 / (i + 1)^s.
class ZipfTable {
  public:
    ZipfTable(std::size_t n, double s);
    std::size_t draw(Rng &rng) const;
    std::size_t size() const noexcept { return cumulative_.size(); }

  private:
    std::vector<double> cumulative_;
};

struct RandomKgConfig {
    std::size_t nodes = 50;
    std::size_t preds = 5;
    std::size_t triples = 200; // drawn, before deduplication
    /// Zipf exponent for subject, predicate and object popularity (0 = uniform).
    double skew = 1.0;
    std::uint64_t seed = 0;
};

/// Triples with Zipf-popular subjects, predicates and objects over
/// <http://example.org/n{i}> / <http://example.org/p{i}>.
KnowledgeGraph generate_random_kg(const RandomKgConfig &config);

struct UniversityKgConfig {
    std::size_t target_triples = 50'000;
    std::size_t departments_per_university = 15;
    /// Pool of universities referenced by degree triples.
    std::size_t university_pool = 60;
    /// Zipf exponent for course, advisor, author and degree-source choices.
    double skew = 1.0;
    std::uint64_t seed = 0;
};

/// University-domain KG (departments, faculty, students, courses, publications)
/// with skewed popularity, generated department by department until the target
/// triple count is reached.
KnowledgeGraph generate_university_kg(const UniversityKgConfig &config);

} // namespace lmkg
