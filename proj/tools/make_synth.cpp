// Generates a reproducible synthetic embeddings file: gaussian features with
// a planted radial minority class (the minority sits inside the majority's
// hull, so a linear SVC at C=1 collapses to majority prediction).
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qksvm/pipeline.hpp"
#include "qksvm/rng.hpp"

using namespace qksvm;

namespace {

double next_gaussian(Rng& rng) {
  // Box-Muller on splitmix64 uniforms keeps the output platform-stable.
  double u1 = rng.next_double();
  while (u1 <= 0.0) u1 = rng.next_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic embeddings csv with a radial minority class"};
  std::size_t n = 500, dim = 32;
  std::uint64_t seed = 7;
  double minority_radius = 1.2;
  double flip_rate = 0.03;
  std::string out = "synthetic.csv";
  std::string model_tag = "synth";
  std::string seed_tag = "seed_0";
  app.add_option("--n", n, "sample count");
  app.add_option("--dim", dim, "embedding dimension");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--radius", minority_radius, "minority ball radius in the first 3 dims");
  app.add_option("--flip", flip_rate, "label noise rate");
  app.add_option("--out", out, "output csv path");
  app.add_option("--model-tag", model_tag, "manifest model name");
  app.add_option("--seed-tag", seed_tag, "manifest seed tag");
  CLI11_PARSE(app, argc, argv);

  Rng rng(seed);
  Dataset ds;
  ds.features = Matrix(n, dim);
  ds.ids.resize(n);
  ds.labels.resize(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof(id), "s%05zu", i);
    ds.ids[i] = id;
    double r2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = next_gaussian(rng);
      ds.features(i, c) = v;
      if (c < 3) r2 += v * v;
    }
    int label = r2 < minority_radius * minority_radius ? 1 : 0;
    if (rng.next_double() < flip_rate) label = 1 - label;
    ds.labels[i] = label;
  }
  save_dataset_csv(ds, out);

  std::ofstream manifest(out + ".json");
  manifest << "{\n  \"model_name\": \"" << model_tag << "\",\n  \"dim\": " << dim
           << ",\n  \"seed_tag\": \"" << seed_tag << "\"\n}\n";

  std::size_t minority = 0;
  for (int l : ds.labels) minority += l;
  std::cout << out << ": " << n << " samples, " << minority << " minority ("
            << 100.0 * static_cast<double>(minority) / static_cast<double>(n) << "%)\n";
  return 0;
}
