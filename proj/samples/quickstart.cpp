// Generates a two-extractor synthetic bundle, selects 30% of it with
// RAM-APL and with MIN, and prints the subset diversity of each.

#include <cstdio>

#include "coresel/coresel.hpp"

int main() {
  coresel::SynthSpec spec;
  spec.classes = 5;
  spec.per_class = 60;
  spec.dims = {32, 48};
  spec.separation = 1.0;
  spec.spread = 0.5;
  spec.seed = 7;
  auto bundle = coresel::generate(spec);

  auto plan = coresel::plan_budget(bundle.labels(), 0.3);
  coresel::SelectorConfig cfg;
  auto ram_apl = coresel::select(bundle, plan, cfg);
  cfg.method = coresel::Method::min;
  auto min = coresel::select(bundle, plan, cfg);

  auto w = coresel::weights(cfg.alpha, cfg.beta, plan.p);
  std::printf("budget %zu of %zu samples, W1=%.3f W2=%.3f\n", plan.total, bundle.size(), w.w1, w.w2);
  for (const auto* sel : {&ram_apl, &min}) {
    auto div = coresel::subset_diversity(bundle.matrix(0), bundle.labels(), *sel);
    std::printf("%-8s whole-subset cosine distance %.4f\n", sel->method.c_str(), *div.whole);
  }
}
