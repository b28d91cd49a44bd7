#pragma once

// Subcommand entry point shared by tools/trialenroll and the tests.
//
//   ingest | featurize | train | evaluate | predict | explain | importance |
//   stats | stub-embeddings
//
// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trialenroll/embeddings.hpp"
#include "trialenroll/evaluation.hpp"
#include "trialenroll/explain.hpp"
#include "trialenroll/features.hpp"
#include "trialenroll/ingest.hpp"
#include "trialenroll/model.hpp"
#include "trialenroll/model_io.hpp"
#include "trialenroll/training.hpp"

namespace trialenroll::cli {

inline constexpr std::string_view kVersion = "1.0.0";

namespace fs = std::filesystem;
using nlohmann::json;

struct StoreFlags {
  std::string drug, disease, word, sentence, llm_drug, llm_disease;

  void add_to(CLI::App& app) {
    app.add_option("--drug-store", drug, "DrugName embedding store directory");
    app.add_option("--disease-store", disease, "DiseaseName embedding store directory");
    app.add_option("--word-store", word, "Word embedding store directory");
    app.add_option("--sentence-store", sentence, "CriterionSentence embedding store directory");
    app.add_option("--llm-drug-store", llm_drug, "LlmDrug embedding store directory");
    app.add_option("--llm-disease-store", llm_disease, "LlmDisease embedding store directory");
  }

  json to_json() const {
    return {{"drug", drug}, {"disease", disease}, {"word", word}, {"sentence", sentence},
            {"llm_drug", llm_drug}, {"llm_disease", llm_disease}};
  }
};

// Owns whichever stores were requested.
struct LoadedStores {
  std::vector<std::unique_ptr<EmbeddingStore>> owned;
  EmbeddingSources sources;

  explicit LoadedStores(const StoreFlags& f) {
    auto load = [&](const std::string& path) -> const EmbeddingStore* {
      if (path.empty()) return nullptr;
      owned.push_back(std::make_unique<EmbeddingStore>(load_store(path)));
      return owned.back().get();
    };
    sources.drug = load(f.drug);
    sources.disease = load(f.disease);
    sources.word = load(f.word);
    sources.sentence = load(f.sentence);
    sources.llm_drug = load(f.llm_drug);
    sources.llm_disease = load(f.llm_disease);
  }
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// One manifest per output directory; rewritten by every command writing there.
inline void write_manifest(const fs::path& primary_output, const std::string& command,
                           const json& config, const std::vector<std::string>& inputs,
                           std::uint64_t seed, double wall_time_s) {
  fs::path dir = primary_output.parent_path();
  if (dir.empty()) dir = ".";
  json m = {{"command", command},
            {"config_hash", hex64(fnv1a64(config.dump()))},
            {"config", config},
            {"inputs", inputs},
            {"seed", seed},
            {"versions", {{"trialenroll", kVersion}, {"model_format", kModelFormatVersion}}},
            {"wall_time_s", wall_time_s}};
  write_json_file(dir / "manifest.json", m);
}

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + p.parent_path().string());
  }
}

inline Date parse_cutoff(const std::string& s) {
  auto d = detail::parse_date(s);
  if (!d) throw Error(ErrorKind::InvalidConfig, "bad cutoff date " + s);
  return *d;
}

inline fs::path sibling(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

// Model schema, falling back to --schema or schema.json beside `near`.
inline FeatureSchema resolve_schema(const SavedModel* model, const std::string& flag,
                                    const fs::path& near) {
  if (!flag.empty()) return schema_from_json(read_json_file(flag));
  if (model && model->schema) return *model->schema;
  const fs::path guess = near.parent_path() / "schema.json";
  if (fs::exists(guess)) return schema_from_json(read_json_file(guess));
  throw Error(ErrorKind::SchemaMismatch, "no feature schema: pass --schema");
}

struct Runner {
  std::uint64_t seed = 42;
  std::ostream& out;
  std::ostream& err;

  using Clock = std::chrono::steady_clock;

  static double since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }

  struct IngestOpts {
    std::string xml_dir, jsonl, out, rejections, label_rule, train_out, test_out;
    std::string cutoff = "2015-01-01";
    bool relabel = false;
  };

  void ingest(const IngestOpts& o) {
    const auto t0 = Clock::now();
    const LabelRule rule =
        o.label_rule.empty() ? LabelRule::defaults() : LabelRule::from_json(read_json_file(o.label_rule));
    IngestResult result;
    if (!o.xml_dir.empty()) {
      result = ingest_xml_directory(o.xml_dir, rule);
    } else {
      result = finalize_records(read_records_jsonl(o.jsonl), rule, o.relabel);
    }
    ensure_parent(o.out);
    write_records_jsonl(o.out, result.records);
    const fs::path rej_path = o.rejections.empty() ? sibling(o.out, ".rejections.jsonl") : fs::path(o.rejections);
    {
      std::ofstream rej(rej_path, std::ios::binary);
      if (!rej) throw Error(ErrorKind::IoError, "cannot write " + rej_path.string());
      for (const auto& r : result.rejections) rej << to_json(r).dump() << '\n';
    }
    json config = {{"xml_dir", o.xml_dir}, {"jsonl", o.jsonl}, {"label_rule", o.label_rule},
                   {"cutoff", o.cutoff}, {"relabel", o.relabel}};
    out << "records: " << result.records.size() << ", rejected: " << result.rejections.size()
        << ", age warnings: " << result.counters.age_warnings << '\n';
    for (const auto& [status, n] : result.unmapped_statuses) {
      out << "  unmapped status \"" << status << "\": " << n << '\n';
    }
    if (!o.train_out.empty() || !o.test_out.empty()) {
      if (o.train_out.empty() || o.test_out.empty()) {
        throw Error(ErrorKind::InvalidConfig, "--train-out and --test-out go together");
      }
      const SplitConfig cfg{parse_cutoff(o.cutoff)};
      const auto split = temporal_split(result.records, cfg);
      if (count_leakage(split, cfg) != 0) throw Error(ErrorKind::InvalidRecord, "split leakage");
      ensure_parent(o.train_out);
      ensure_parent(o.test_out);
      write_records_jsonl(o.train_out, split.train);
      write_records_jsonl(o.test_out, split.test);
      out << "split: train " << split.train.size() << ", test " << split.test.size()
          << ", dropped " << split.dropped.size() << '\n';
      config["split"] = {{"train", split.train.size()}, {"test", split.test.size()},
                         {"dropped", split.dropped.size()}};
    }
    write_manifest(o.out, "ingest", config, {o.xml_dir.empty() ? o.jsonl : o.xml_dir}, seed,
                   since(t0));
  }

  struct FeaturizeOpts {
    std::string records, out, schema, schema_out;
    std::size_t dim = 768;
    std::size_t top_k = 30;
    std::string han_mode = "words";
    bool no_standardize = false;
    StoreFlags stores;
  };

  void featurize(const FeaturizeOpts& o) {
    const auto t0 = Clock::now();
    const auto records = read_records_jsonl(o.records);
    FeatureSchema schema;
    if (!o.schema.empty()) {
      schema = schema_from_json(read_json_file(o.schema));
    } else {
      SchemaOptions opt;
      opt.dimension = o.dim;
      opt.top_k_countries = o.top_k;
      opt.han_mode = o.han_mode == "sentences" ? HanMode::Sentences : HanMode::Words;
      opt.standardize_numeric = !o.no_standardize;
      opt.stub_seed = seed;
      schema = fit_schema(records, opt);
    }
    LoadedStores stores(o.stores);
    std::vector<FeatureBundle> bundles;
    bundles.reserve(records.size());
    for (const auto& r : records) bundles.push_back(assemble(r, schema, stores.sources));
    ensure_parent(o.out);
    write_bundles_jsonl(o.out, bundles);
    fs::path schema_path = o.schema_out;
    if (schema_path.empty() && o.schema.empty()) schema_path = fs::path(o.out).parent_path() / "schema.json";
    if (!schema_path.empty()) {
      ensure_parent(schema_path);
      write_json_file(schema_path, to_json(schema));
    }
    out << "featurized " << bundles.size() << " records, cross width " << schema.cross_width << '\n';
    write_manifest(o.out, "featurize",
                   {{"schema", o.schema}, {"dim", schema.dimension}, {"top_k", o.top_k},
                    {"han_mode", o.han_mode}, {"stores", o.stores.to_json()}},
                   {o.records}, seed, since(t0));
  }

  struct TrainOpts {
    std::string features, config, out, schema, epochs_out;
    std::string model_kind = "dcn";
    std::optional<std::size_t> epochs, batch_size, patience;
    std::optional<double> lr;
    bool seed_given = false;
  };

  void train_cmd(const TrainOpts& o) {
    const auto t0 = Clock::now();
    TrainConfig cfg;
    if (!o.config.empty()) cfg = train_config_from_json(read_json_file(o.config));
    if (o.seed_given || o.config.empty()) cfg.seed = seed;
    if (o.epochs) cfg.max_epochs = *o.epochs;
    if (o.batch_size) cfg.batch_size = *o.batch_size;
    if (o.patience) cfg.patience = *o.patience;
    if (o.lr) cfg.lr = *o.lr;
    cfg.validate();

    const auto bundles = read_bundles_jsonl(o.features);
    if (bundles.empty()) throw Error(ErrorKind::EmptyDataset, "no training bundles");
    const FeatureSchema schema = resolve_schema(nullptr, o.schema, o.features);
    // Same bookkeeping for both kinds so model files stay comparable.
    SavedModel model;
    model.schema = schema;
    model.training = {{"config", to_json(cfg)}, {"examples", bundles.size()}};
    const fs::path epochs_path = o.epochs_out.empty() ? sibling(o.out, ".epochs.jsonl") : fs::path(o.epochs_out);
    ensure_parent(o.out);

    if (o.model_kind == "logistic") {
      auto balanced = oversample_minority(bundles, cfg.seed);
      std::vector<Vector> rows;
      for (const auto& b : balanced) rows.push_back(b.cross_input);
      const auto labels = labels_of(balanced);
      model.kind = ModelKind::Logistic;
      model.logistic = logistic_baseline(rows, labels);
      out << "logistic baseline: " << model.logistic->iterations << " iterations, train loss "
          << logistic_loss(*model.logistic, rows, labels) << '\n';
    } else if (o.model_kind == "dcn") {
      const auto result = fit_model(bundles, cfg, schema.dimension);
      model.kind = ModelKind::Dcn;
      model.dcn = result.best;
      model.training["best_epoch"] = result.best_epoch;
      model.training["epochs_run"] = result.logs.size();
      std::ofstream logs(epochs_path, std::ios::binary);
      if (!logs) throw Error(ErrorKind::IoError, "cannot write " + epochs_path.string());
      char line[128];
      out << "epoch  train_loss  val_loss\n";
      for (const auto& e : result.logs) {
        logs << to_json(e).dump() << '\n';
        std::snprintf(line, sizeof line, "%5zu  %10.6f  %8.6f%s\n", e.epoch, e.train_loss,
                      e.val_loss, e.epoch == result.best_epoch ? "  *" : "");
        out << line;
      }
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown --model-kind " + o.model_kind);
    }
    save_model(model, o.out);
    write_manifest(o.out, "train", {{"config", to_json(cfg)}, {"model_kind", o.model_kind}},
                   {o.features, o.config}, cfg.seed, since(t0));
  }

  struct EvalOpts {
    std::string model, features, out;
    double threshold = 0.5;
  };

  void evaluate(const EvalOpts& o) {
    const auto t0 = Clock::now();
    const auto model = load_model(o.model);
    const auto bundles = read_bundles_jsonl(o.features);
    const auto scores = model.scorer()(bundles);
    const auto labels = labels_of(bundles);
    const auto report = evaluate_predictions(scores, labels, o.threshold);
    ensure_parent(o.out);
    json doc = to_json(report);
    doc["examples"] = bundles.size();
    write_json_file(o.out, doc);
    out << metric_table({{model.kind == ModelKind::Dcn ? "DCN" : "LR", report}});
    write_manifest(o.out, "evaluate", {{"threshold", o.threshold}}, {o.model, o.features}, seed,
                   since(t0));
  }

  struct PredictOpts {
    std::string model, features, out;
  };

  void predict(const PredictOpts& o) {
    const auto t0 = Clock::now();
    const auto model = load_model(o.model);
    const auto bundles = read_bundles_jsonl(o.features);
    const auto scores = model.scorer()(bundles);
    ensure_parent(o.out);
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + o.out);
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      json row = {{"nct_id", bundles[i].nct_id}, {"probability", scores[i]}};
      row["label"] = bundles[i].label ? json(*bundles[i].label) : json(nullptr);
      f << row.dump() << '\n';
    }
    out << "predicted " << bundles.size() << " records\n";
    write_manifest(o.out, "predict", json::object(), {o.model, o.features}, seed, since(t0));
  }

  struct ExplainOpts {
    std::string model, records, nct, out, schema;
    StoreFlags stores;
  };

  void explain(const ExplainOpts& o) {
    const auto t0 = Clock::now();
    const auto model = load_model(o.model);
    if (model.kind != ModelKind::Dcn) throw Error(ErrorKind::InvalidConfig, "explain needs a dcn model");
    const FeatureSchema schema = resolve_schema(&model, o.schema, o.model);
    const auto records = read_records_jsonl(o.records);
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const TrialRecord& r) { return r.nct_id == o.nct; });
    if (it == records.end()) throw Error(ErrorKind::RecordNotFound, o.nct);
    LoadedStores stores(o.stores);
    const auto doc = explain_export(*model.dcn, assemble_annotated(*it, schema, stores.sources));
    ensure_parent(o.out);
    write_json_file(o.out, doc);
    out << o.nct << ": probability " << doc["probability"].get<double>() << '\n';
    write_manifest(o.out, "explain", {{"nct", o.nct}, {"stores", o.stores.to_json()}},
                   {o.model, o.records}, seed, since(t0));
  }

  struct ImportanceOpts {
    std::string model, features, out, schema;
    std::size_t repeats = 3;
    bool per_scalar = false;
    bool include_criteria = false;
  };

  void importance(const ImportanceOpts& o) {
    const auto t0 = Clock::now();
    const auto model = load_model(o.model);
    const FeatureSchema schema = resolve_schema(&model, o.schema, o.features);
    const auto bundles = read_bundles_jsonl(o.features);
    const bool criteria = o.include_criteria && model.kind == ModelKind::Dcn;
    const auto report = permutation_importance(
        model.scorer(), bundles, permutation_groups(schema, o.per_scalar, criteria), o.repeats, seed);
    ensure_parent(o.out);
    write_json_file(o.out, to_json(report));
    char line[160];
    std::snprintf(line, sizeof line, "baseline PR-AUC %.4f over %zu repeats\n",
                  report.baseline_pr_auc, report.repeats);
    out << line;
    for (const auto& g : report.groups) {
      std::snprintf(line, sizeof line, "  %-24s %+.4f +- %.4f\n", g.group.c_str(), g.mean_drop,
                    g.std_drop);
      out << line;
    }
    write_manifest(o.out, "importance",
                   {{"repeats", o.repeats}, {"per_scalar", o.per_scalar},
                    {"include_criteria", criteria}},
                   {o.model, o.features}, seed, since(t0));
  }

  struct StatsOpts {
    std::string records, out;
  };

  void stats(const StatsOpts& o) {
    const auto t0 = Clock::now();
    const auto summary = summarize_dataset(read_records_jsonl(o.records));
    const json doc = to_json(summary);
    ensure_parent(o.out);
    write_json_file(o.out, doc);
    out << doc.dump(2) << '\n';
    write_manifest(o.out, "stats", json::object(), {o.records}, seed, since(t0));
  }

  struct StubOpts {
    std::string records, kind = "Word", out;
    std::size_t dim = 768;
  };

  // Materializes a store holding the stub vector of every key of `kind`
  // found in the records.
  void stub_embeddings(const StubOpts& o) {
    const auto t0 = Clock::now();
    const auto kind = parse_embedding_kind(o.kind);
    if (!kind) throw Error(ErrorKind::InvalidConfig, "unknown embedding kind " + o.kind);
    const auto records = read_records_jsonl(o.records);
    std::set<std::string> keys;
    for (const auto& r : records) {
      switch (*kind) {
        case EmbeddingKind::DrugName:
        case EmbeddingKind::LlmDrug:
          for (const auto& d : r.drugs) keys.insert(normalize_key(d));
          break;
        case EmbeddingKind::DiseaseName:
        case EmbeddingKind::LlmDisease:
          for (const auto& d : r.diseases) keys.insert(normalize_key(d));
          break;
        case EmbeddingKind::CriterionSentence:
          for (const auto* l : {&r.inclusion, &r.exclusion}) {
            for (const auto& s : *l) keys.insert(normalize_key(s));
          }
          break;
        case EmbeddingKind::Word:
          for (const auto* l : {&r.inclusion, &r.exclusion}) {
            for (const auto& s : *l) {
              for (const auto& t : tokenize(s)) keys.insert(normalize_key(t));
            }
          }
          break;
      }
    }
    EmbeddingStore store(*kind, o.dim);
    const StubConfig stub{seed, o.dim};
    for (const auto& k : keys) store.insert(k, stub_vector(stub, k));
    save_store(store, o.out);
    out << "wrote " << store.size() << " " << to_string(*kind) << " vectors to " << o.out << '\n';
    write_json_file(fs::path(o.out) / "stub_manifest.json",
                    {{"command", "stub-embeddings"}, {"seed", seed}, {"records", o.records},
                     {"wall_time_s", since(t0)}});
  }
};

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Clinical-trial enrollment success prediction", "trialenroll"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

  Runner::IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse registry XML or canonical JSONL records");
  auto* src = c_ingest->add_option_group("source");
  src->add_option("--xml-dir", ingest.xml_dir, "Directory of registry XML files");
  src->add_option("--jsonl", ingest.jsonl, "Canonical JSONL records");
  src->require_option(1);
  c_ingest->add_option("--out", ingest.out, "Output records JSONL")->required();
  c_ingest->add_option("--rejections", ingest.rejections, "Rejection log (default <out>.rejections.jsonl)");
  c_ingest->add_option("--label-rule", ingest.label_rule, "Label rule JSON");
  c_ingest->add_option("--train-out", ingest.train_out, "Temporal split: training records");
  c_ingest->add_option("--test-out", ingest.test_out, "Temporal split: test records");
  c_ingest->add_option("--cutoff", ingest.cutoff, "Split cutoff date")->capture_default_str();
  c_ingest->add_flag("--relabel", ingest.relabel, "Re-derive labels of JSONL records");

  Runner::FeaturizeOpts feat;
  auto* c_feat = app.add_subcommand("featurize", "Build feature bundles (fits a schema unless --schema)");
  c_feat->add_option("--records", feat.records)->required();
  c_feat->add_option("--out", feat.out, "Output bundles JSONL")->required();
  c_feat->add_option("--schema", feat.schema, "Apply an existing schema.json");
  c_feat->add_option("--schema-out", feat.schema_out, "Where to write the fitted schema");
  c_feat->add_option("--dim", feat.dim, "Embedding dimension")->capture_default_str();
  c_feat->add_option("--top-k", feat.top_k, "Country vocabulary size")->capture_default_str();
  c_feat->add_option("--han-mode", feat.han_mode, "words | sentences")
      ->check(CLI::IsMember({"words", "sentences"}))
      ->capture_default_str();
  c_feat->add_flag("--no-standardize", feat.no_standardize, "Keep raw ages and counts");
  feat.stores.add_to(*c_feat);

  Runner::TrainOpts train;
  auto* c_train = app.add_subcommand("train", "Train the DCN (or the logistic baseline)");
  c_train->add_option("--features", train.features)->required();
  c_train->add_option("--config", train.config, "TrainConfig JSON");
  c_train->add_option("--out", train.out, "Model JSON")->required();
  c_train->add_option("--schema", train.schema, "Schema to embed (default: beside features)");
  c_train->add_option("--epochs-out", train.epochs_out, "Epoch log JSONL (default <out>.epochs.jsonl)");
  c_train->add_option("--model-kind", train.model_kind, "dcn | logistic")
      ->check(CLI::IsMember({"dcn", "logistic"}))
      ->capture_default_str();
  c_train->add_option("--epochs", train.epochs, "Override max_epochs");
  c_train->add_option("--batch-size", train.batch_size, "Override batch_size");
  c_train->add_option("--patience", train.patience, "Override patience");
  c_train->add_option("--lr", train.lr, "Override learning rate");

  Runner::EvalOpts eval;
  auto* c_eval = app.add_subcommand("evaluate", "Metric report for a model on feature bundles");
  c_eval->add_option("--model", eval.model)->required();
  c_eval->add_option("--features", eval.features)->required();
  c_eval->add_option("--out", eval.out, "Report JSON")->required();
  c_eval->add_option("--threshold", eval.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  Runner::PredictOpts pred;
  auto* c_pred = app.add_subcommand("predict", "Probabilities per record");
  c_pred->add_option("--model", pred.model)->required();
  c_pred->add_option("--features", pred.features)->required();
  c_pred->add_option("--out", pred.out, "Predictions JSONL")->required();

  Runner::ExplainOpts expl;
  auto* c_expl = app.add_subcommand("explain", "Word and sentence attention for one trial");
  c_expl->add_option("--model", expl.model)->required();
  c_expl->add_option("--records", expl.records)->required();
  c_expl->add_option("--nct", expl.nct)->required();
  c_expl->add_option("--out", expl.out)->required();
  c_expl->add_option("--schema", expl.schema, "Override the schema embedded in the model");
  expl.stores.add_to(*c_expl);

  Runner::ImportanceOpts imp;
  auto* c_imp = app.add_subcommand("importance", "Permutation importance by feature group");
  c_imp->add_option("--model", imp.model)->required();
  c_imp->add_option("--features", imp.features)->required();
  c_imp->add_option("--out", imp.out)->required();
  c_imp->add_option("--schema", imp.schema);
  c_imp->add_option("--repeats", imp.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  c_imp->add_flag("--per-scalar", imp.per_scalar, "Shuffle single columns instead of groups");
  c_imp->add_flag("--include-criteria", imp.include_criteria, "Also shuffle criteria groups");

  Runner::StatsOpts st;
  auto* c_stats = app.add_subcommand("stats", "Dataset summary statistics");
  c_stats->add_option("--records", st.records)->required();
  c_stats->add_option("--out", st.out)->required();

  Runner::StubOpts stub;
  auto* c_stub = app.add_subcommand("stub-embeddings", "Materialize a deterministic stub store");
  c_stub->add_option("--records", stub.records)->required();
  c_stub->add_option("--kind", stub.kind)->capture_default_str();
  c_stub->add_option("--dim", stub.dim)->check(CLI::PositiveNumber)->capture_default_str();
  c_stub->add_option("--out", stub.out, "Store directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 1;
  }

  Runner run{seed, out, err};
  try {
    if (*c_ingest) run.ingest(ingest);
    else if (*c_feat) run.featurize(feat);
    else if (*c_train) {
      train.seed_given = seed_opt->count() > 0;
      run.train_cmd(train);
    }
    else if (*c_eval) run.evaluate(eval);
    else if (*c_pred) run.predict(pred);
    else if (*c_expl) run.explain(expl);
    else if (*c_imp) run.importance(imp);
    else if (*c_stats) run.stats(st);
    else if (*c_stub) run.stub_embeddings(stub);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_io() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace trialenroll::cli
