// coke: command-line front end for the CoKE pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coke/cache.hpp"
#include "coke/config.hpp"
#include "coke/dataset.hpp"
#include "coke/error.hpp"
#include "coke/eval.hpp"
#include "coke/http_client.hpp"
#include "coke/io.hpp"
#include "coke/kernels.hpp"
#include "coke/manifest.hpp"
#include "coke/mock_server.hpp"
#include "coke/partition.hpp"
#include "coke/probe.hpp"
#include "coke/synthetic.hpp"
#include "coke/toy_trainer.hpp"

namespace fs = std::filesystem;
using namespace coke;

namespace {

constexpr std::string_view kMockScheme = "mock:";

struct Globals {
    std::string config;
    std::optional<std::string> endpoint, model, signal, out_dir;
    std::optional<double> unk_quantile, k_quantile;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_parallel;
    bool quiet = false;
};

struct Run {
    RunConfig cfg;
    RunManifest manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    std::string out(const std::string& name) const { return (fs::path(cfg.out_dir) / name).string(); }

    void finish(const std::string& manifest_name) {
        manifest.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        manifest.save(out(manifest_name));
        std::cerr << "manifest: " << out(manifest_name) << "\n";
    }
};

Run start(const Globals& g, const std::string& subcommand, bool need_endpoint) {
    ConfigResolver resolver;
    if (!g.config.empty()) resolver.apply_file(g.config);
    nlohmann::json flags = nlohmann::json::object();
    if (g.endpoint) flags["endpoint.base_url"] = *g.endpoint;
    if (g.model) flags["endpoint.model"] = *g.model;
    if (g.signal) flags["signal"] = *g.signal;
    if (g.out_dir) flags["out_dir"] = *g.out_dir;
    if (g.unk_quantile) flags["unk_quantile"] = *g.unk_quantile;
    if (g.k_quantile) flags["k_quantile"] = *g.k_quantile;
    if (g.seed) flags["seed"] = *g.seed;
    if (g.max_parallel) flags["endpoint.max_parallel"] = *g.max_parallel;
    resolver.apply_flags(flags);
    resolver.apply_env();
    const auto resolved = resolver.resolved_json();
    if (resolved.at("endpoint.base_url").get<std::string>().starts_with(kMockScheme) &&
        resolved.at("endpoint.model").get<std::string>().empty())
        resolver.apply_flags({{"endpoint.model", "synthetic-7b"}});

    Run run;
    run.cfg = resolver.resolve(need_endpoint);
    if (!g.quiet)
        std::cerr << "coke " << kToolkitVersion << " " << subcommand << " (kernels: "
                  << kernels::isa_name(kernels::active().isa) << ")\nconfig (flags > file > defaults):\n"
                  << resolver.describe();
    fs::create_directories(run.cfg.out_dir);
    run.manifest.subcommand = subcommand;
    run.manifest.config = resolver.resolved_json();
    run.manifest.seed = run.cfg.seed;
    run.manifest.started_at = io::utc_timestamp();
    if (!g.config.empty()) run.manifest.add_inputs({g.config});
    return run;
}

// Owns whatever backs the endpoint for the duration of a run.
struct Endpoint {
    std::optional<SyntheticUniverse> universe;
    std::unique_ptr<CompletionClient> client;
};

Endpoint connect(Run& run) {
    Endpoint e;
    const auto& url = run.cfg.endpoint.base_url;
    if (url.starts_with(kMockScheme)) {
        const std::string path = url.substr(kMockScheme.size());
        if (path.empty()) throw ConfigError({"mock endpoint needs a universe file: mock:<path>"});
        e.universe = SyntheticUniverse::load(path);
        e.client = std::make_unique<SyntheticEndpoint>(*e.universe, run.cfg.endpoint.model);
        run.manifest.add_inputs({path});
    } else {
        e.client = std::make_unique<HttpCompletionClient>(run.cfg.endpoint);
    }
    return e;
}

TemplateSet templates_for(Run& run) {
    if (run.cfg.templates.empty()) return TemplateSet::defaults();
    run.manifest.add_inputs({run.cfg.templates});
    return TemplateSet::load(run.cfg.templates);
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

// ---- subcommands ------------------------------------------------------------

struct SynthArgs {
    std::size_t size = 500;
    double answerable = 0.6;
    std::uint64_t seed = 7;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
    Run run = start(g, "synth", false);
    SyntheticSpec spec;
    spec.size = a.size;
    spec.answerable_fraction = a.answerable;
    spec.seed = a.seed;
    const auto u = SyntheticUniverse::generate(spec);
    const auto universe_path = run.out("universe.json"), questions_path = run.out("questions.jsonl");
    u.save(universe_path);
    save_questions(questions_path, u.questions());
    run.manifest.add_outputs({universe_path, questions_path});
    run.manifest.details = {{"size", a.size}, {"answerable_fraction", a.answerable}, {"universe_seed", a.seed}};
    run.finish("synth.run.json");
    return 0;
}

struct ProbeArgs {
    std::string questions;
    std::string output = "probe.jsonl";
    std::size_t offset = 0, limit = 0;
};

int cmd_probe(const Globals& g, const ProbeArgs& a) {
    Run run = start(g, "probe", true);
    auto questions = load_questions(a.questions);
    run.manifest.add_inputs({a.questions});
    if (a.offset || a.limit) {
        const std::size_t lo = std::min(a.offset, questions.size());
        const std::size_t hi = a.limit ? std::min(questions.size(), lo + a.limit) : questions.size();
        questions = std::vector<QuestionRecord>(questions.begin() + static_cast<long>(lo),
                                                questions.begin() + static_cast<long>(hi));
    }
    auto endpoint = connect(run);
    const auto templates = templates_for(run);
    CacheStore cache(run.cfg.cache_path());
    ProbeOptions opt;
    opt.max_failure_ratio = run.cfg.max_failure_ratio;
    const auto batch =
        probe_dataset(run.cfg.endpoint, *endpoint.client, questions, templates.get(AwarenessKind::Direct), &cache, opt);
    const auto path = run.out(a.output);
    save_probe_results(path, batch.results);
    run.manifest.add_outputs({path});
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : batch.failures) failures.push_back({{"question_id", f.question_id}, {"message", f.message}});
    run.manifest.details = {{"probed", batch.results.size()},
                            {"failures", failures},
                            {"cache_hits", batch.cache_hits},
                            {"cache", run.cfg.cache_path()},
                            {"corrupt_cache_records", cache.corrupt_records()},
                            {"template_version", templates.version()},
                            {"stop_rule", kStopRule},
                            {"temperature", EndpointConfig::temperature}};
    std::cerr << "probed " << batch.results.size() << " questions (" << batch.cache_hits << " from cache, "
              << batch.failures.size() << " failed)\n";
    run.finish(fs::path(a.output).stem().string() + ".run.json");
    return 0;
}

struct PartitionArgs {
    std::string probe;
    std::optional<double> delta_unk, delta_k;
};

int cmd_partition(const Globals& g, const PartitionArgs& a) {
    Run run = start(g, "partition", false);
    const auto results = load_probe_results(a.probe);
    run.manifest.add_inputs({a.probe});
    ThresholdSpec spec;
    spec.unk_quantile = run.cfg.unk_quantile;
    spec.k_quantile = run.cfg.k_quantile;
    spec.signal_kind = run.cfg.signal;
    if (a.delta_unk || a.delta_k) {
        if (!a.delta_unk || !a.delta_k) throw ConfigError({"--delta-unk and --delta-k must be given together"});
        spec.mode = ThresholdMode::Absolute;
        spec.delta_unk = *a.delta_unk;
        spec.delta_k = *a.delta_k;
    }
    auto parts = partition(results, resolve_thresholds(results, spec));
    parts.provenance = run.manifest.inputs;
    const auto records = run.out("partition.jsonl"), manifest = run.out("partition.manifest.json");
    save_partition(records, manifest, parts);
    run.manifest.add_outputs({records, manifest});
    run.manifest.details = partition_manifest(parts);
    std::cerr << "D_unk " << parts.d_unk.size() << ", D_k " << parts.d_k.size() << ", excluded "
              << parts.excluded_count << " (delta_unk " << parts.thresholds.delta_unk << ", delta_k "
              << parts.thresholds.delta_k << ")\n";
    run.finish("partition.run.json");
    return 0;
}

struct DatasetArgs {
    std::string partition_dir;
    std::string questions;
    std::string format = "internal";
};

int cmd_build_dataset(const Globals& g, const DatasetArgs& a) {
    Run run = start(g, "build-dataset", false);
    const auto dir = a.partition_dir.empty() ? run.cfg.out_dir : a.partition_dir;
    const auto records = (fs::path(dir) / "partition.jsonl").string();
    const auto pmanifest = (fs::path(dir) / "partition.manifest.json").string();
    const auto parts = load_partition(records, pmanifest);
    const auto questions = load_questions(a.questions);
    run.manifest.add_inputs({records, pmanifest, a.questions});
    std::unordered_map<std::string, std::string> text;
    for (const auto& q : questions) text.emplace(q.id, q.text);
    const auto templates = templates_for(run);
    DatasetOptions opt{run.cfg.seed, run.cfg.balance};
    const auto groups = build_dataset(parts, templates, text, opt);

    const auto format = parse_export_format(a.format);
    const auto out = run.out(format == ExportFormat::Internal ? "dataset.jsonl" : "dataset.sft.jsonl");
    export_dataset(groups, format, out);
    run.manifest.add_outputs({out});
    const auto sidecar = run.out("dataset.manifest.json");
    auto dm = dataset_manifest(groups, opt, run.manifest.inputs, run.manifest.outputs);
    dm["format"] = a.format;
    dm["template_version"] = templates.version();
    io::write_file(sidecar, dm.dump(2) + "\n");
    run.manifest.add_outputs({sidecar});
    run.manifest.details = {{"groups", groups.size()}, {"examples", groups.size() * 3}, {"format", a.format}};
    std::cerr << groups.size() << " groups, " << groups.size() * 3 << " examples\n";
    run.finish("build-dataset.run.json");
    return 0;
}

struct TrainArgs {
    std::string dataset;
    std::optional<long> steps;
    std::optional<double> lr, con_weight;
    std::string checkpoint = "toy.ckpt";
};

int cmd_toy_train(const Globals& g, const TrainArgs& a) {
    Run run = start(g, "toy-train", false);
    const auto dataset = a.dataset.empty() ? run.out("dataset.jsonl") : a.dataset;
    const auto groups = load_internal(dataset);
    run.manifest.add_inputs({dataset});
    const auto templates = templates_for(run);
    ToyModel model(FeatureConfig{run.cfg.nuisance_dim, run.cfg.nuisance_scale, run.cfg.seed}, templates,
                   InitConfig{{0.0, 4.0, 1.5}, 0.5, run.cfg.seed});
    model.add_answers_from(groups);
    TrainOptions opt;
    opt.steps = a.steps.value_or(run.cfg.train_steps);
    opt.schedule.peak = a.lr.value_or(run.cfg.train_lr);
    opt.schedule.initial = opt.schedule.peak / 3.0;
    opt.schedule.warmup_steps = run.cfg.train_warmup;
    opt.weights.con = a.con_weight.value_or(run.cfg.con_weight);
    if (opt.steps < 1) throw ConfigError({"--steps must be >= 1"});

    const auto result = train(std::move(model), groups, opt);
    const auto ckpt = run.out(a.checkpoint);
    const auto log = run.out("train_log.jsonl");
    const nlohmann::json meta = {{"steps", opt.steps},
                                 {"lr_peak", opt.schedule.peak},
                                 {"lr_initial", opt.schedule.initial},
                                 {"warmup_steps", opt.schedule.warmup_steps},
                                 {"loss_weights", {{"unsup", opt.weights.unsup}, {"con", opt.weights.con}}},
                                 {"seed", run.cfg.seed},
                                 {"groups", groups.size()}};
    result.model.save_checkpoint(ckpt, meta);
    io::write_file(log, training_log_jsonl(result.log));
    run.manifest.add_outputs({ckpt, log});
    const auto& last = result.log.back().loss;
    run.manifest.details = meta;
    run.manifest.details["final_loss"] = {{"l_unsup", last.l_unsup}, {"l_con", last.l_con}, {"total", last.total}};
    std::fprintf(stderr, "trained %ld steps: l_unsup %.4f l_con %.4f total %.4f\n", opt.steps, last.l_unsup,
                 last.l_con, last.total);
    run.finish("toy-train.run.json");
    return 0;
}

struct EvalArgs {
    std::string mode = "raw";
    std::string questions, probe;
    std::string train_questions, train_probe;
    std::string checkpoint;
    std::string label;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
    const bool prompt_mode = a.mode == "prior" || a.mode == "posterior" || a.mode == "ic-idk" || a.mode == "verb";
    Run run = start(g, "eval", prompt_mode);
    const auto questions = load_questions(a.questions);
    const auto probe = load_probe_results(a.probe);
    run.manifest.add_inputs({a.questions, a.probe});
    const auto split = build_split(probe, questions);
    const auto gold = gold_index(questions);

    std::vector<QuestionRecord> train_q;
    std::vector<ProbeResult> train_p;
    std::optional<SplitSpec> train_split;
    if (!a.train_questions.empty() || !a.train_probe.empty()) {
        if (a.train_questions.empty() || a.train_probe.empty())
            throw ConfigError({"--train-questions and --train-probe must be given together"});
        train_q = load_questions(a.train_questions);
        train_p = load_probe_results(a.train_probe);
        run.manifest.add_inputs({a.train_questions, a.train_probe});
        train_split = build_split(train_p, train_q);
    }

    AwarenessReport report;
    nlohmann::json details = {{"mode", a.mode}};
    if (a.mode == "raw") {
        report = raw_report(probe, gold, split);
    } else if (a.mode == "uncertainty") {
        double threshold;
        if (train_split) {
            threshold = uncertainty_baseline(train_p, run.cfg.signal, gold_index(train_q), *train_split).threshold;
        } else {
            std::cerr << "no training set given; searching the threshold on the evaluation set\n";
            threshold = uncertainty_baseline(probe, run.cfg.signal, gold, split).threshold;
            details["threshold_searched_on"] = "evaluation set";
        }
        report = apply_uncertainty(probe, run.cfg.signal, threshold, gold, split);
        details["threshold"] = threshold;
        details["signal"] = to_string(run.cfg.signal);
    } else if (a.mode == "coke") {
        if (a.checkpoint.empty()) throw ConfigError({"--mode coke needs --checkpoint"});
        const auto model = ToyModel::from_checkpoint(a.checkpoint);
        run.manifest.add_inputs({a.checkpoint});
        const auto ev = evaluate_toy(model, templates_for(run), probe, run.cfg.signal, questions, split);
        report = ev.report;
    } else if (prompt_mode) {
        auto endpoint = connect(run);
        CacheStore cache(run.cfg.cache_path());
        const LabeledSet test{&questions, &probe, &split};
        std::optional<LabeledSet> train;
        if (train_split) train = LabeledSet{&train_q, &train_p, &*train_split};
        BaselineOptions opt;
        opt.demonstrations = run.cfg.demonstrations;
        opt.seed = run.cfg.seed;
        opt.train = train ? &*train : nullptr;
        opt.probe.max_failure_ratio = run.cfg.max_failure_ratio;
        const auto res =
            prompt_baseline(run.cfg.endpoint, *endpoint.client, test, parse_baseline_mode(a.mode), opt, &cache);
        report = res.report;
        if (res.threshold) details["threshold"] = *res.threshold;
        if (res.parse_failure_rate) details["parse_failure_rate"] = *res.parse_failure_rate;
    } else {
        throw ConfigError({"unknown eval mode '" + a.mode + "'"});
    }

    const std::string label = a.label.empty() ? a.mode : a.label;
    nlohmann::json doc = report.to_json();
    doc["method"] = label;
    doc["split"] = {{"t_k", split.t_k.size()}, {"t_unk", split.t_unk.size()}, {"accuracy", split.accuracy},
                    {"reference_model_id", split.reference_model_id}};
    for (const auto& [k, v] : details.items()) doc[k] = v;
    const auto report_path = run.out("report-" + label + ".json");
    const auto table_path = run.out("report-" + label + ".txt");
    const auto split_path = run.out("split.json");
    io::write_file(report_path, doc.dump(2) + "\n");
    const std::string table = format_report_table({{label, report}});
    io::write_file(table_path, table);
    io::write_file(split_path, to_json(split).dump() + "\n");
    run.manifest.add_outputs({report_path, table_path, split_path});
    run.manifest.details = doc;
    std::cout << table;
    run.finish("eval-" + label + ".run.json");
    return 0;
}

struct ScoreArgs {
    std::string questions, probe;
    std::size_t bins = 0;
};

int cmd_threshold_search(const Globals& g, const ScoreArgs& a) {
    Run run = start(g, "threshold-search", false);
    const auto questions = load_questions(a.questions);
    const auto probe = load_probe_results(a.probe);
    run.manifest.add_inputs({a.questions, a.probe});
    const auto split = build_split(probe, questions);
    const auto choice = uncertainty_baseline(probe, run.cfg.signal, gold_index(questions), split);
    nlohmann::json doc = {{"signal", to_string(run.cfg.signal)}, {"threshold", choice.threshold},
                          {"report", choice.report.to_json()}};
    const auto path = run.out("threshold.json");
    io::write_file(path, doc.dump(2) + "\n");
    run.manifest.add_outputs({path});
    run.manifest.details = doc;
    print_json(doc);
    run.finish("threshold-search.run.json");
    return 0;
}

int cmd_histogram(const Globals& g, const ScoreArgs& a) {
    Run run = start(g, "histogram", false);
    const auto questions = load_questions(a.questions);
    const auto probe = load_probe_results(a.probe);
    run.manifest.add_inputs({a.questions, a.probe});
    const auto split = build_split(probe, questions);
    const auto h = confidence_histogram(probe, run.cfg.signal, split, a.bins ? a.bins : run.cfg.bins);
    const auto path = run.out(std::string("histogram-") + std::string(to_string(run.cfg.signal)) + ".csv");
    io::write_file(path, h.csv());
    run.manifest.add_outputs({path});
    if (const auto share = incorrect_share_below(probe, run.cfg.signal, split, 0.4))
        run.manifest.details["incorrect_share_below_0.4"] = *share;
    std::cout << h.csv();
    run.finish("histogram.run.json");
    return 0;
}

struct ServeArgs {
    std::string universe;
    std::string host = "127.0.0.1";
    int port = 8089;
};

int cmd_serve_mock(const ServeArgs& a) {
    const auto universe = SyntheticUniverse::load(a.universe);
    SyntheticEndpoint endpoint(universe);
    MockCompletionServer server(endpoint);
    std::cerr << "serving " << universe.items().size() << " synthetic questions on http://" << a.host << ":"
              << a.port << "\n";
    server.listen(a.host, a.port);
    return 0;
}

int report_error(const std::exception& e, const char* kind, int code,
                 const std::vector<std::string>& violations = {}) {
    nlohmann::json j = {{"error", kind}, {"message", e.what()}};
    if (!violations.empty()) j["violations"] = violations;
    std::cerr << j.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coke: probe, partition, train and evaluate knowledge-boundary expression"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolkitVersion));

    Globals g;
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--endpoint", g.endpoint, "Endpoint base URL, or mock:<universe.json>");
    app.add_option("--model", g.model, "Model name sent to the endpoint");
    app.add_option("--signal", g.signal, "Confidence signal")->check(CLI::IsMember({"min-prob", "fst-prob", "prod-prob"}));
    app.add_option("--unk-quantile", g.unk_quantile, "Bottom share of confidences that becomes D_unk");
    app.add_option("--k-quantile", g.k_quantile, "Top share of confidences that becomes D_k");
    app.add_option("--seed", g.seed, "Seed for every randomized step");
    app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifests");
    app.add_option("--max-parallel", g.max_parallel, "Concurrent endpoint requests");
    app.add_flag("--quiet", g.quiet, "Do not print the resolved config");
    for (auto* opt : app.get_options()) opt->configurable(false);
    app.fallthrough();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic question universe");
    c_synth->add_option("--size", synth.size, "Number of questions");
    c_synth->add_option("--answerable", synth.answerable, "Share of answerable questions");
    c_synth->add_option("--universe-seed", synth.seed, "Seed for the universe");

    ProbeArgs probe;
    auto* c_probe = app.add_subcommand("probe", "Probe the model on a question file");
    c_probe->add_option("--questions", probe.questions, "Question records (JSONL)")->required()->check(CLI::ExistingFile);
    c_probe->add_option("--output", probe.output, "Output file name inside --out-dir");
    c_probe->add_option("--offset", probe.offset, "Skip the first N questions");
    c_probe->add_option("--limit", probe.limit, "Probe at most N questions");

    PartitionArgs part;
    auto* c_part = app.add_subcommand("partition", "Split probe results into D_k and D_unk");
    c_part->add_option("--probe", part.probe, "Probe results (JSONL)")->required()->check(CLI::ExistingFile);
    c_part->add_option("--delta-unk", part.delta_unk, "Absolute lower threshold");
    c_part->add_option("--delta-k", part.delta_k, "Absolute upper threshold");

    DatasetArgs ds;
    auto* c_ds = app.add_subcommand("build-dataset", "Build consistency-grouped training data");
    c_ds->add_option("--partition-dir", ds.partition_dir, "Directory holding partition.jsonl (default --out-dir)");
    c_ds->add_option("--questions", ds.questions, "Question records (JSONL)")->required()->check(CLI::ExistingFile);
    c_ds->add_option("--format", ds.format, "internal or sft-flat")->check(CLI::IsMember({"internal", "sft-flat"}));

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("toy-train", "Train the toy model on an internal dataset");
    c_tr->add_option("--dataset", tr.dataset, "Internal-format dataset (default <out-dir>/dataset.jsonl)");
    c_tr->add_option("--steps", tr.steps, "Gradient steps");
    c_tr->add_option("--lr", tr.lr, "Peak learning rate");
    c_tr->add_option("--con-weight", tr.con_weight, "Weight of the consistency term (0 disables it)");
    c_tr->add_option("--checkpoint", tr.checkpoint, "Checkpoint file name inside --out-dir");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "Score knowledge-boundary expression");
    c_ev->add_option("--mode", ev.mode, "raw, coke, uncertainty, prior, posterior, ic-idk or verb")
        ->check(CLI::IsMember({"raw", "coke", "uncertainty", "prior", "posterior", "ic-idk", "verb"}));
    c_ev->add_option("--questions", ev.questions, "Evaluation questions with gold answers")->required()->check(CLI::ExistingFile);
    c_ev->add_option("--probe", ev.probe, "Greedy probe results for the evaluation questions")->required()->check(CLI::ExistingFile);
    c_ev->add_option("--train-questions", ev.train_questions, "Labeled training questions (uncertainty, ic-idk, verb)");
    c_ev->add_option("--train-probe", ev.train_probe, "Probe results for the training questions");
    c_ev->add_option("--checkpoint", ev.checkpoint, "Toy model checkpoint (mode coke)");
    c_ev->add_option("--label", ev.label, "Row label for the report (default: the mode)");

    ScoreArgs ts;
    auto* c_ts = app.add_subcommand("threshold-search", "Find the S_aware-optimal confidence threshold");
    c_ts->add_option("--questions", ts.questions, "Questions with gold answers")->required()->check(CLI::ExistingFile);
    c_ts->add_option("--probe", ts.probe, "Probe results")->required()->check(CLI::ExistingFile);

    ScoreArgs hist;
    auto* c_hist = app.add_subcommand("histogram", "Confidence histogram per correctness class (CSV)");
    c_hist->add_option("--questions", hist.questions, "Questions with gold answers")->required()->check(CLI::ExistingFile);
    c_hist->add_option("--probe", hist.probe, "Probe results")->required()->check(CLI::ExistingFile);
    c_hist->add_option("--bins", hist.bins, "Number of bins (default from config)");

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve-mock", "Serve a synthetic universe over the OpenAI-style HTTP API");
    c_serve->add_option("--universe", serve.universe, "Universe file from `coke synth`")->required()->check(CLI::ExistingFile);
    c_serve->add_option("--host", serve.host, "Bind address");
    c_serve->add_option("--port", serve.port, "Port");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_synth) return cmd_synth(g, synth);
        if (*c_probe) return cmd_probe(g, probe);
        if (*c_part) return cmd_partition(g, part);
        if (*c_ds) return cmd_build_dataset(g, ds);
        if (*c_tr) return cmd_toy_train(g, tr);
        if (*c_ev) return cmd_eval(g, ev);
        if (*c_ts) return cmd_threshold_search(g, ts);
        if (*c_hist) return cmd_histogram(g, hist);
        if (*c_serve) return cmd_serve_mock(serve);
    } catch (const ConfigError& e) {
        return report_error(e, "config", 2, e.violations());
    } catch (const CapabilityError& e) {
        return report_error(e, "capability", 3);
    } catch (const ProbeRunError& e) {
        return report_error(e, "probe", 4);
    } catch (const UndefinedMetric& e) {
        return report_error(e, "undefined-metric", 5);
    } catch (const TrainingFailure& e) {
        return report_error(e, "training", 6);
    } catch (const IoError& e) {
        return report_error(e, "io", 7);
    } catch (const DegenerateDistribution& e) {
        return report_error(e, "degenerate-distribution", 8);
    } catch (const Error& e) {
        return report_error(e, "invalid-input", 8);
    } catch (const std::exception& e) {
        return report_error(e, "internal", 9);
    }
    return 1;
}
