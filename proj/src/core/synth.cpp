#include "synth.hpp"

#include <algorithm>
#include <cmath>

namespace zsle {

void SynthSpec::validate() const {
  if (seen_classes < 2)
    throw ConfigError("synth: need at least 2 seen classes, unseen semantics mix pairs of them");
  if (unseen_classes < 1 || samples_per_class < 1)
    throw ConfigError("synth: class and sample counts must be >= 1");
  if (attributes < 1 || regions < 1 || dim < 1)
    throw ConfigError("synth: attributes, regions and dim must be >= 1");
  if (sigma < 0.0) throw ConfigError("synth: sigma must be >= 0");
  if (attributes > dim)
    throw ConfigError("synth: attributes (" + std::to_string(attributes) +
                      ") must not exceed dim (" + std::to_string(dim) +
                      "), orthogonal prototypes would not exist");
}

namespace {

// Orthonormal D x M prototype basis: Gaussian draws plus modified
// Gram-Schmidt in double precision.
std::vector<std::vector<double>> draw_prototypes(std::size_t d, std::size_t m, Rng& rng) {
  std::vector<std::vector<double>> protos(m, std::vector<double>(d));
  for (std::size_t j = 0; j < m; ++j) {
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) protos[j][k] = rng.normal();
      for (std::size_t prev = 0; prev < j; ++prev) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += protos[j][k] * protos[prev][k];
        for (std::size_t k = 0; k < d; ++k) protos[j][k] -= dot * protos[prev][k];
      }
      double norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) norm += protos[j][k] * protos[j][k];
      norm = std::sqrt(norm);
      if (norm > 1e-6) {  // redraw on a (vanishingly unlikely) degenerate vector
        for (std::size_t k = 0; k < d; ++k) protos[j][k] /= norm;
        break;
      }
    }
  }
  return protos;
}

// Seen classes get a random active subset of attributes. Unseen classes are
// convex mixtures of two seen classes, so their semantic vectors stay inside
// the span of the seen rows; class-level supervision on the seen classes then
// determines the scores of unseen classes too, which is what makes zero-shot
// transfer on this data work rather than depend on luck.
std::vector<double> seen_class_semantics(std::size_t m, Rng& rng) {
  std::vector<double> a(m, 0.0);
  std::size_t active = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (rng.uniform() < 0.5) {
      a[j] = rng.uniform(0.4, 1.0);
      ++active;
    }
  }
  while (active < 2) {  // every class needs at least two active attributes
    const std::size_t j = rng.below(static_cast<std::uint32_t>(m));
    if (a[j] == 0.0) {
      a[j] = rng.uniform(0.4, 1.0);
      ++active;
    }
  }
  return a;
}

std::vector<double> unseen_class_semantics(const std::vector<std::vector<double>>& rows,
                                           std::size_t seen_count, Rng& rng) {
  const std::size_t i = rng.below(static_cast<std::uint32_t>(seen_count));
  std::size_t j = i;
  while (j == i) j = rng.below(static_cast<std::uint32_t>(seen_count));
  const double w = rng.uniform(0.35, 0.65);
  const std::size_t m = rows[i].size();
  std::vector<double> a(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) a[k] = w * rows[i][k] + (1.0 - w) * rows[j][k];
  return a;
}

std::size_t sample_attribute(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    acc += weights[j];
    if (u < acc) return j;
  }
  return weights.size() - 1;
}

FeatureRecord make_record(const std::vector<double>& a,
                          const std::vector<std::vector<double>>& protos, std::int64_t label,
                          const SynthSpec& spec, Rng& rng) {
  const std::size_t d = spec.dim, n = spec.regions, m = spec.attributes;
  constexpr double kBase = 0.6;   // shared mixture weight on every active prototype
  constexpr double kBoost = 1.0;  // extra weight on the region's emphasized attribute

  FeatureRecord rec;
  rec.label = label;
  rec.local = make_matrix<float>(n, d);
  rec.global_vec.assign(d, 0.0f);
  std::vector<double> global(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t emphasized = sample_attribute(a, rng);
    std::vector<double> z(d, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double w = kBase * a[j] + (j == emphasized ? kBoost : 0.0);
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) z[k] += w * protos[j][k];
    }
    if (spec.sigma > 0.0)
      for (std::size_t k = 0; k < d; ++k) z[k] += spec.sigma * rng.normal();
    for (std::size_t k = 0; k < d; ++k) {
      rec.local.at(r, k) = static_cast<float>(z[k]);
      global[k] += z[k];
    }
  }
  for (std::size_t k = 0; k < d; ++k)
    rec.global_vec[k] = static_cast<float>(global[k] / static_cast<double>(n));
  return rec;
}

}  // namespace

SynthResult generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const std::size_t total = spec.seen_classes + spec.unseen_classes;
  const auto protos = draw_prototypes(spec.dim, spec.attributes, rng);

  SynthResult out;
  out.semantic.values = make_matrix<float>(total, spec.attributes);
  out.semantic.class_ids.resize(total);
  std::vector<std::vector<double>> semantics(total);
  for (std::size_t c = 0; c < total; ++c) {
    for (;;) {
      semantics[c] = c < spec.seen_classes
                         ? seen_class_semantics(spec.attributes, rng)
                         : unseen_class_semantics(semantics, spec.seen_classes, rng);
      bool dup = false;
      for (std::size_t prev = 0; prev < c && !dup; ++prev) dup = semantics[prev] == semantics[c];
      if (!dup) break;
    }
    for (std::size_t j = 0; j < spec.attributes; ++j)
      out.semantic.values.at(c, j) = static_cast<float>(semantics[c][j]);
    // ids deliberately offset from row indices to keep id/index mixups loud
    const std::int64_t id = 101 + static_cast<std::int64_t>(c);
    out.semantic.class_ids[c] = id;
    if (c < spec.seen_classes)
      out.split.seen.insert(id);
    else
      out.split.unseen.insert(id);
  }

  auto fill = [&](FeatureDataset& ds, DatasetRole role, std::size_t first_class,
                  std::size_t n_classes) {
    ds.role = role;
    ds.regions = spec.regions;
    ds.dim = spec.dim;
    for (std::size_t c = first_class; c < first_class + n_classes; ++c)
      for (std::size_t s = 0; s < spec.samples_per_class; ++s)
        ds.records.push_back(
            make_record(semantics[c], protos, out.semantic.class_ids[c], spec, rng));
  };
  fill(out.train, DatasetRole::Train, 0, spec.seen_classes);
  fill(out.test_seen, DatasetRole::TestSeen, 0, spec.seen_classes);
  fill(out.test_unseen, DatasetRole::TestUnseen, spec.seen_classes, spec.unseen_classes);
  return out;
}

}  // namespace zsle
