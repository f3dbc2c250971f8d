#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coresel/coresel.hpp"

namespace coresel::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Failure {
  int code;
  std::string message;
};

std::string fmt9(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.9g", v);
  return buf.data();
}

std::string sha256_hex(const fs::path& path) {
  auto data = detail::read_file(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io_failure, "sha256 failed for '" + path.string() + "'");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

/// Wraps input loading so that any library error maps to kInvalidInput.
template <typename Fn>
auto load_input(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Failure{kInvalidInput, e.what()};
  }
}

template <typename Fn>
auto check_flags(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Failure{kInvalidFlags, e.what()};
  }
}

/// Writes via a sibling temporary and rename, so a failed run never leaves a
/// half-written file at `path`.
void write_atomic(const fs::path& path, const std::string& data) {
  fs::path tmp = path;
  tmp += ".tmp";
  detail::write_file(tmp, data);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot move output into place at '" + path.string() + "'");
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_atomic(path, text);
  }
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

nlohmann::ordered_json input_digests(const std::vector<std::string>& paths) {
  auto inputs = nlohmann::ordered_json::array();
  for (const auto& p : paths) inputs.push_back({{"path", p}, {"sha256", sha256_hex(p)}});
  return inputs;
}

nlohmann::ordered_json manifest_base(const std::vector<std::string>& args) {
  nlohmann::ordered_json m;
  m["tool"] = "coresel";
  m["version"] = kVersion;
  m["command_line"] = args;
  return m;
}

// ---------------------------------------------------------------------------

struct ScoringFlags {
  std::vector<std::string> features;
  std::string labels;
  double rate = 0.0;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  bool equal_weights = false;
  std::size_t threads = 1;
};

void add_bundle_flags(CLI::App& cmd, ScoringFlags& f) {
  cmd.add_option("--features", f.features, "Feature file (FSEL or CSV); repeat for each extractor")->required();
  cmd.add_option("--labels", f.labels, "Label file (LSEL or CSV)")->required();
  cmd.add_option("--threads", f.threads, "Maximum worker threads")->check(CLI::PositiveNumber);
}

void add_weight_flags(CLI::App& cmd, ScoringFlags& f) {
  cmd.add_option("--rate", f.rate, "Sampling rate p in (0, 1]")->required();
  cmd.add_option("--alpha", f.alpha, "Weight schedule floor alpha");
  cmd.add_option("--beta", f.beta, "Weight schedule slope beta");
  cmd.add_flag("--equal-weights", f.equal_weights, "Use W1 = W2 = 1 instead of the schedule");
}

FusionWeights fusion_weights(const ScoringFlags& f) {
  return check_flags([&] { return f.equal_weights ? equal_weights(f.rate) : weights(f.alpha, f.beta, f.rate); });
}

std::string weight_header(const FusionWeights& w) {
  std::string s;
  s += "# rate\t" + fmt9(w.p) + "\n";
  s += "# alpha\t" + fmt9(w.alpha) + "\n";
  s += "# beta\t" + fmt9(w.beta) + "\n";
  s += std::string("# equal_weights\t") + (w.equal_weights ? "1" : "0") + "\n";
  s += "# w1\t" + fmt9(w.w1) + "\n";
  s += "# w2\t" + fmt9(w.w2) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// select

struct SelectFlags : ScoringFlags {
  std::string method = "ram_apl";
  double lambda = 1.0;
  std::uint64_t seed = 0;
  std::string primary;
  std::string out;
  std::string report;
  std::string manifest;
};

int run_select(const SelectFlags& f, const CLI::App& cmd, const std::vector<std::string>& args) {
  const auto started = Clock::now();
  SelectorConfig cfg;
  auto method = parse_method(f.method);
  if (!method) throw Failure{kInvalidFlags, "unknown method '" + f.method + "'"};
  cfg.method = *method;
  if (cmd.count("--seed") > 0) cfg.seed = f.seed;
  cfg.lambda = f.lambda;
  cfg.alpha = f.alpha;
  cfg.beta = f.beta;
  cfg.equal_weights = f.equal_weights;
  if (!f.primary.empty()) cfg.primary_matrix = f.primary;
  check_flags([&] {
    cfg.validate();
    detail::require(f.rate > 0.0 && f.rate <= 1.0, ErrorCode::invalid_argument, "--rate must lie in (0, 1]");
    return 0;
  });
  const Parallelism par{f.threads};

  auto bundle = load_input([&] { return load_bundle(to_paths(f.features), f.labels); });
  if (cfg.primary_matrix) load_input([&] { return &bundle.find(*cfg.primary_matrix); });

  auto plan = plan_budget(bundle.labels(), f.rate);
  auto sel = select(bundle, plan, cfg, par);
  sel.validate(bundle.labels());

  std::string report_text;
  if (!f.report.empty()) {
    std::ostringstream r;
    r << "# method\t" << sel.method << "\n";
    r << "# n\t" << bundle.size() << "\n";
    r << "# total\t" << plan.total << "\n";
    for (std::size_t c = 0; c < plan.per_class.size(); ++c) {
      r << "# budget\t" << c << "\t" << plan.per_class[c] << "\t" << bundle.labels().class_size(c) << "\n";
    }
    std::vector<bool> chosen(bundle.size(), false);
    for (auto j : sel.selected) chosen[j] = true;
    if (cfg.method == Method::ram_apl) {
      auto w = cfg.equal_weights ? equal_weights(plan.p) : weights(cfg.alpha, cfg.beta, plan.p);
      auto b = score_bundle(bundle, w, par);
      r << weight_header(w);
      r << "index\tlabel\tselected\tram\tapl\tscore\n";
      for (std::size_t j = 0; j < bundle.size(); ++j) {
        r << j << "\t" << bundle.labels()[j] << "\t" << (chosen[j] ? 1 : 0) << "\t" << fmt9(b.ram.values[j]) << "\t"
          << fmt9(b.apl.values[j]) << "\t" << fmt9(b.score[j]) << "\n";
      }
    } else {
      r << "index\tlabel\tselected" << (sel.scores ? "\tkey" : "") << "\n";
      for (std::size_t j = 0; j < bundle.size(); ++j) {
        r << j << "\t" << bundle.labels()[j] << "\t" << (chosen[j] ? 1 : 0);
        if (sel.scores) r << "\t" << fmt9((*sel.scores)[j]);
        r << "\n";
      }
    }
    report_text = r.str();
  }

  auto manifest = manifest_base(args);
  manifest["command"] = "select";
  manifest["config"] = {{"method", std::string(to_string(cfg.method))},
                        {"rate", f.rate},
                        {"alpha", cfg.alpha},
                        {"beta", cfg.beta},
                        {"equal_weights", cfg.equal_weights},
                        {"lambda", cfg.lambda},
                        {"primary_matrix", cfg.primary_matrix ? *cfg.primary_matrix : bundle.matrix(0).extractor_id()},
                        {"threads", f.threads},
                        {"features", f.features},
                        {"labels", f.labels},
                        {"out", f.out},
                        {"report", f.report}};
  std::vector<std::string> inputs = f.features;
  inputs.push_back(f.labels);
  manifest["inputs"] = input_digests(inputs);
  manifest["seed"] = cfg.seed ? nlohmann::ordered_json(*cfg.seed) : nlohmann::ordered_json(nullptr);
  manifest["selected"] = sel.selected.size();
  manifest["per_class_budget"] = plan.per_class;

  write_atomic(f.out, encode_selection(sel));
  if (!f.report.empty()) write_atomic(f.report, report_text);
  manifest["duration_seconds"] = std::chrono::duration<double>(Clock::now() - started).count();
  write_atomic(f.manifest.empty() ? f.out + ".manifest.json" : f.manifest, manifest.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// score

int run_score(const ScoringFlags& f, const std::string& out_path, std::ostream& out) {
  auto w = fusion_weights(f);
  auto bundle = load_input([&] { return load_bundle(to_paths(f.features), f.labels); });
  auto b = score_bundle(bundle, w, Parallelism{f.threads});
  std::ostringstream s;
  s << "# models\t" << bundle.models() << "\n";
  s << weight_header(w);
  s << "index\tlabel\tram\tapl\tscore\n";
  for (std::size_t j = 0; j < bundle.size(); ++j) {
    s << j << "\t" << bundle.labels()[j] << "\t" << fmt9(b.ram.values[j]) << "\t" << fmt9(b.apl.values[j]) << "\t"
      << fmt9(b.score[j]) << "\n";
  }
  emit(out_path, s.str(), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// analyze

int run_diversity(const std::string& features, const std::string& labels, const std::string& selection,
                  const std::string& out_path, std::ostream& out) {
  auto f = load_input([&] { return load_features(features); });
  auto y = load_input([&] { return load_labels(labels); });
  auto sel = load_input([&] {
    detail::require(f.rows() == y.size(), ErrorCode::sample_count_mismatch, "features and labels disagree on n");
    return load_selection(selection, y);
  });
  auto report = subset_diversity(f, y, sel);
  std::ostringstream s;
  s << "# selected\t" << sel.selected.size() << "\n";
  s << "# whole\t" << (report.whole ? fmt9(*report.whole) : "NA") << "\n";
  s << "class\tselected\tdiversity\n";
  for (auto [c, v] : report.per_class) s << c << "\t" << sel.per_class_budget[c] << "\t" << fmt9(v) << "\n";
  emit(out_path, s.str(), out);
  return kOk;
}

int run_pseudo(const ScoringFlags& f, const std::string& out_path, std::ostream& out) {
  auto bundle = load_input([&] { return load_bundle(to_paths(f.features), f.labels); });
  auto report = pseudo_label_report(bundle, Parallelism{f.threads});
  std::ostringstream s;
  s << "extractor\tclass\tcorrect\ttotal\taccuracy\n";
  for (const auto& r : report) {
    const auto correct = std::accumulate(r.class_correct.begin(), r.class_correct.end(), std::size_t{0});
    s << r.extractor_id << "\tall\t" << correct << "\t" << bundle.size() << "\t" << fmt9(r.overall) << "\n";
    for (std::size_t c = 0; c < r.class_total.size(); ++c) {
      s << r.extractor_id << "\t" << c << "\t" << r.class_correct[c] << "\t" << r.class_total[c] << "\t"
        << fmt9(r.class_accuracy(c)) << "\n";
    }
  }
  emit(out_path, s.str(), out);
  return kOk;
}

int run_cross_model(const std::vector<std::string>& features, std::size_t threads, const std::string& out_path,
                    std::ostream& out) {
  if (features.size() < 2) throw Failure{kInvalidFlags, "cross-model needs at least two --features"};
  std::vector<FeatureMatrix> matrices;
  for (const auto& p : features) matrices.push_back(load_input([&] { return load_features(p); }));
  load_input([&] {
    for (const auto& m : matrices) {
      detail::require(m.rows() == matrices.front().rows(), ErrorCode::sample_count_mismatch,
                      "feature files disagree on sample count");
    }
    return 0;
  });
  auto sim = cross_model_similarity(std::span<const FeatureMatrix>(matrices), Parallelism{threads});
  std::ostringstream s;
  s << "# reduced_dim\t" << sim.reduced_dim << "\n";
  s << "extractor";
  for (const auto& id : sim.extractor_ids) s << "\t" << id;
  s << "\n";
  for (std::size_t a = 0; a < sim.models(); ++a) {
    s << sim.extractor_ids[a];
    for (std::size_t b = 0; b < sim.models(); ++b) s << "\t" << fmt9(sim(a, b));
    s << "\n";
  }
  emit(out_path, s.str(), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
  SynthSpec spec;
  std::string prefix;
  std::string format = "binary";
};

int run_synth(SynthFlags f, const std::vector<std::string>& args) {
  const auto started = Clock::now();
  check_flags([&] {
    f.spec.validate();
    return 0;
  });
  auto bundle = generate(f.spec);
  auto labels = inject_symmetric_noise(bundle.labels(), f.spec.noise_rate, f.spec.seed);
  const bool csv = f.format == "csv";
  const std::string feature_ext = csv ? ".csv" : ".fsel";
  const std::string label_ext = csv ? ".csv" : ".lsel";

  std::vector<std::string> written;
  for (const auto& m : bundle.matrices()) {
    const std::string path = f.prefix + "." + m.extractor_id() + feature_ext;
    write_atomic(path, csv ? encode_features_csv(m) : encode_features(m));
    written.push_back(path);
  }
  const std::string label_path = f.prefix + ".labels" + label_ext;
  const std::string clean_path = f.prefix + ".clean" + label_ext;
  write_atomic(label_path, csv ? encode_labels_csv(labels) : encode_labels(labels));
  write_atomic(clean_path, csv ? encode_labels_csv(bundle.labels()) : encode_labels(bundle.labels()));
  written.push_back(label_path);
  written.push_back(clean_path);

  auto manifest = manifest_base(args);
  manifest["command"] = "synth";
  manifest["config"] = {{"classes", f.spec.classes},       {"per_class", f.spec.per_class},
                        {"dims", f.spec.dims},             {"separation", f.spec.separation},
                        {"spread", f.spec.spread},         {"imbalance_ratio", f.spec.imbalance_ratio},
                        {"noise_rate", f.spec.noise_rate}, {"format", f.format}};
  manifest["seed"] = f.spec.seed;
  manifest["outputs"] = input_digests(written);
  manifest["class_sizes"] = synth_class_sizes(f.spec);
  manifest["duration_seconds"] = std::chrono::duration<double>(Clock::now() - started).count();
  write_atomic(f.prefix + ".manifest.json", manifest.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// convert

struct ConvertFlags {
  std::string in;
  std::string out;
  std::string to;
  std::string kind;
  std::string id;
};

int run_convert(const ConvertFlags& f) {
  auto data = load_input([&] { return detail::read_file(f.in); });
  std::string kind = f.kind;
  if (kind.empty()) kind = detail::has_magic(data, "LSEL") ? "labels" : "features";
  if (kind == "labels") {
    auto y = load_input([&] { return detail::has_magic(data, "LSEL") ? decode_labels(data) : decode_labels_csv(data); });
    write_atomic(f.out, f.to == "csv" ? encode_labels_csv(y) : encode_labels(y));
  } else {
    auto m = load_input([&] {
      auto mat = detail::has_magic(data, "FSEL") ? decode_features(data)
                                                 : decode_features_csv(data, fs::path(f.in).stem().string());
      return f.id.empty() ? mat : mat.with_id(f.id);
    });
    write_atomic(f.out, f.to == "csv" ? encode_features_csv(m) : encode_features(m));
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class-balanced coreset selection over multi-extractor features", "coresel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SelectFlags sf;
  auto* select_cmd = app.add_subcommand("select", "Select a class-balanced subset");
  add_bundle_flags(*select_cmd, sf);
  add_weight_flags(*select_cmd, sf);
  select_cmd->add_option("--method", sf.method, "ram_apl|random|min|mds|kcg|herding|graph_cut");
  select_cmd->add_option("--lambda", sf.lambda, "Graph cut redundancy penalty");
  select_cmd->add_option("--seed", sf.seed, "Seed (random only)");
  select_cmd->add_option("--primary-matrix", sf.primary, "Extractor id used by baselines");
  select_cmd->add_option("--out", sf.out, "Selected indices, one per line")->required();
  select_cmd->add_option("--report", sf.report, "Per-sample TSV report");
  select_cmd->add_option("--manifest", sf.manifest, "Run manifest (default: <out>.manifest.json)");

  ScoringFlags scf;
  std::string score_out;
  auto* score_cmd = app.add_subcommand("score", "Emit per-sample RAM, APL and fused scores");
  add_bundle_flags(*score_cmd, scf);
  add_weight_flags(*score_cmd, scf);
  score_cmd->add_option("--out", score_out, "Output TSV (default: stdout)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Subset and feature-space diagnostics");
  analyze_cmd->require_subcommand(1);
  std::string div_features, div_labels, div_selection, div_out;
  auto* div_cmd = analyze_cmd->add_subcommand("diversity", "Mean pairwise cosine distance of a selection");
  div_cmd->add_option("--features", div_features, "Feature file")->required();
  div_cmd->add_option("--labels", div_labels, "Label file")->required();
  div_cmd->add_option("--selection", div_selection, "Index list as written by select")->required();
  div_cmd->add_option("--out", div_out, "Output TSV (default: stdout)");
  ScoringFlags pf;
  std::string pseudo_out;
  auto* pseudo_cmd = analyze_cmd->add_subcommand("pseudo", "Nearest-centroid pseudo-label accuracy per extractor");
  add_bundle_flags(*pseudo_cmd, pf);
  pseudo_cmd->add_option("--out", pseudo_out, "Output TSV (default: stdout)");
  std::vector<std::string> cm_features;
  std::size_t cm_threads = 1;
  std::string cm_out;
  auto* cm_cmd = analyze_cmd->add_subcommand("cross-model", "PCA-aligned cosine similarity between extractors");
  cm_cmd->add_option("--features", cm_features, "Feature file; repeat for each extractor")->required();
  cm_cmd->add_option("--threads", cm_threads, "Maximum worker threads")->check(CLI::PositiveNumber);
  cm_cmd->add_option("--out", cm_out, "Output TSV (default: stdout)");

  SynthFlags syf;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic Gaussian-blob bundle");
  synth_cmd->add_option("--classes", syf.spec.classes, "Number of classes")->required();
  synth_cmd->add_option("--per-class", syf.spec.per_class, "Samples in the largest class")->required();
  synth_cmd->add_option("--dims", syf.spec.dims, "Feature dimensionality per extractor (repeat or comma-separate)")
      ->delimiter(',');
  synth_cmd->add_option("--separation", syf.spec.separation, "Pairwise centroid distance");
  synth_cmd->add_option("--spread", syf.spec.spread, "Intra-class standard deviation");
  synth_cmd->add_option("--imbalance", syf.spec.imbalance_ratio, "Largest / smallest class size");
  synth_cmd->add_option("--noise", syf.spec.noise_rate, "Symmetric label noise rate");
  synth_cmd->add_option("--seed", syf.spec.seed, "Generator seed");
  synth_cmd->add_option("--out-prefix", syf.prefix, "Output path prefix")->required();
  synth_cmd->add_option("--format", syf.format, "binary|csv")->check(CLI::IsMember({"binary", "csv"}));

  ConvertFlags cf;
  auto* convert_cmd = app.add_subcommand("convert", "Convert between FSEL/LSEL and CSV");
  convert_cmd->add_option("--in", cf.in, "Input file")->required();
  convert_cmd->add_option("--out", cf.out, "Output file")->required();
  convert_cmd->add_option("--to", cf.to, "csv|binary")->required()->check(CLI::IsMember({"csv", "binary"}));
  convert_cmd->add_option("--kind", cf.kind, "features|labels (default: detect)")
      ->check(CLI::IsMember({"features", "labels"}));
  convert_cmd->add_option("--id", cf.id, "Extractor id to store");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidFlags;
  }

  try {
    if (*select_cmd) return run_select(sf, *select_cmd, args);
    if (*score_cmd) return run_score(scf, score_out, out);
    if (*div_cmd) return run_diversity(div_features, div_labels, div_selection, div_out, out);
    if (*pseudo_cmd) return run_pseudo(pf, pseudo_out, out);
    if (*cm_cmd) return run_cross_model(cm_features, cm_threads, cm_out, out);
    if (*synth_cmd) return run_synth(syf, args);
    if (*convert_cmd) return run_convert(cf);
  } catch (const Failure& f) {
    err << "coresel: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    err << "coresel: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kInvalidFlags;
}

}  // namespace coresel::cli
