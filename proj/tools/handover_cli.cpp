// handover: command-line front end for the handover analysis pipeline.
//
// Exit codes: 0 ok, 2 usage, 3 data/format/io, 4 validation, 5 numeric.

#include "handover/config.hpp"
#include "handover/data.hpp"
#include "handover/error.hpp"
#include "handover/features.hpp"
#include "handover/gripnet/model_io.hpp"
#include "handover/gripnet/train.hpp"
#include "handover/gripnet/windows.hpp"
#include "handover/harness.hpp"
#include "handover/motion.hpp"
#include "handover/segmentation.hpp"
#include "handover/serve.hpp"
#include "handover/strategy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace handover;

namespace {

struct Globals {
    std::string config_file;
    std::vector<std::string> overrides;
    bool quiet = false;
};

Config effective_config(const Globals& g)
{
    Config c;
    if (!g.config_file.empty()) c = load_config(g.config_file, c);
    for (const auto& o : g.overrides) c = apply_override(c, o);
    c.validate();
    return c;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const json& j, const fs::path& file)
{
    std::ofstream out(file);
    if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, "write failed for " + file.string());
}

void note(const Globals& g, const std::string& msg)
{
    if (!g.quiet) std::cerr << msg << '\n';
}

std::shared_ptr<const gripnet::VaeLstmModel> maybe_model(const std::string& path)
{
    if (path.empty()) return nullptr;
    return std::make_shared<const gripnet::VaeLstmModel>(gripnet::load_model(path));
}

std::vector<Pose> hand_track(const std::vector<SkeletonFrame>& frames, Body body)
{
    std::vector<Pose> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f[body]);
    return out;
}

// --- segment ---------------------------------------------------------------

int cmd_segment(const Globals& g, const std::string& session_dir, const std::string& out_dir)
{
    const Config cfg = effective_config(g);
    const HandoverRecord session = load_session(session_dir);
    std::vector<seg::SegmentBoundary> bounds;
    if (cfg.segmentation_method == seg::Method::GripIntersection) {
        if (!session.meta.has_forces) fail(ErrorKind::Capability, "session has no grip forces; use segmentation.method=motion_coholding");
        bounds = seg::find_grip_intersections(grip_force(session.giver_grip), grip_force(session.taker_grip), cfg.segmentation);
    } else {
        bounds = seg::find_coholding_segments(hand_track(session.giver_skeleton, features::carrying_hand(session.meta.giver)),
                                              hand_track(session.taker_skeleton, features::carrying_hand(session.meta.taker)),
                                              session.object_pose, cfg.segmentation);
    }

    ensure_dir(out_dir);
    json segments = json::array();
    DatasetManifest manifest;
    std::size_t k = 0;
    for (const auto& b : bounds) {
        json entry{{"center_index", b.center_index},
                   {"start_index", b.start_index},
                   {"end_index", b.end_index},
                   {"method", std::string(seg::to_string(b.method))}};
        HandoverRecord rec;
        try {
            rec = seg::extract(session, b);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Bounds) throw;
            note(g, std::string("skipping segment: ") + e.what());
            entry["extracted"] = false;
            entry["reason"] = e.what();
            segments.push_back(entry);
            continue;
        }
        std::ostringstream id;
        id << "segment_" << std::setw(3) << std::setfill('0') << k++;
        const fs::path dir = fs::path(out_dir) / id.str();
        save_record(rec, dir);
        entry["extracted"] = true;
        entry["id"] = id.str();
        segments.push_back(entry);
        manifest.entries.push_back({dir, rec.meta.weight_kg, rec.meta.object_label, rec.meta.dataset_tag, rec.meta.has_forces});
    }
    write_json({{"session", fs::absolute(session_dir).string()}, {"session_frames", session.length()}, {"segments", segments}},
               fs::path(out_dir) / "segments.json");
    if (!manifest.entries.empty()) save_manifest(manifest, fs::path(out_dir) / "manifest.json");
    write_config(cfg, out_dir);
    std::cout << json{{"segments", bounds.size()}, {"extracted", k}}.dump() << '\n';
    return 0;
}

// --- analyze ---------------------------------------------------------------

std::string csv_number(double v)
{
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

int cmd_analyze(const Globals& g, const std::string& manifest_path, const std::string& out_dir)
{
    const Config cfg = effective_config(g);
    const auto manifest = load_manifest(manifest_path);
    validate(manifest);
    std::vector<features::NamedFeatures> rows;
    for (const auto& e : manifest.entries) {
        const auto rec = load_record(e.path);
        rows.push_back({e.path.filename().string(), features::compute_features(rec, cfg.features)});
    }
    ensure_dir(out_dir);
    std::ofstream csv(fs::path(out_dir) / "features.csv");
    if (!csv) fail(ErrorKind::Io, "cannot write features.csv");
    csv << "id,weight_kg,category";
    for (const auto& c : features::feature_columns()) csv << ',' << c;
    csv << ",undefined\n";
    for (const auto& r : rows) {
        csv << r.id << ',' << csv_number(r.features.weight_kg) << ','
            << features::to_string(features::categorize(r.features.weight_kg).category);
        for (const auto& v : features::feature_values(r.features)) {
            csv << ',';
            if (v) csv << csv_number(*v);
        }
        std::string why;
        for (const auto& u : r.features.undefined) why += (why.empty() ? "" : "; ") + u;
        // Quote: reasons may contain commas.
        std::string quoted = "\"";
        for (char ch : why) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        csv << ',' << quoted << "\"\n";
    }
    csv.close();
    if (!csv) fail(ErrorKind::Io, "write failed for features.csv");
    write_json(features::dataset_statistics(rows), fs::path(out_dir) / "stats.json");
    write_config(cfg, out_dir);
    std::cout << json{{"records", rows.size()}}.dump() << '\n';
    return 0;
}

// --- train / evaluate ------------------------------------------------------

struct WindowSet {
    std::vector<gripnet::GripWindow> windows;
    std::size_t records = 0;
    std::size_t skipped = 0;
};

WindowSet windows_from_manifest(const Globals& g, const std::string& manifest_path, const Config& cfg)
{
    const auto manifest = load_manifest(manifest_path);
    validate(manifest);
    WindowSet set;
    for (const auto& e : manifest.entries) {
        if (!e.has_forces) {
            ++set.skipped;
            continue;
        }
        const auto rec = load_record(e.path);
        const auto f = features::compute_features(rec, cfg.features);
        if (!f.t_rel_start_ms) {
            note(g, "skipping " + e.path.string() + ": release onset not detected");
            ++set.skipped;
            continue;
        }
        auto w = gripnet::make_windows(rec, gripnet::ms_to_step(*f.t_rel_start_ms));
        set.windows.insert(set.windows.end(), w.begin(), w.end());
        ++set.records;
    }
    if (set.windows.empty()) fail(ErrorKind::Validation, "no usable force records in " + manifest_path);
    return set;
}

int cmd_train(const Globals& g, const std::string& stage_text, const std::string& manifest_path, const std::string& out_file,
              const std::string& init_file)
{
    Config cfg = effective_config(g);
    cfg.train.stage = gripnet::parse_stage(stage_text);
    if (cfg.train.stage == gripnet::Stage::Finetune && init_file.empty())
        fail(ErrorKind::Usage, "--stage finetune requires --init <pretrained model>");
    std::optional<gripnet::VaeLstmModel> init;
    if (!init_file.empty()) init = gripnet::load_model(init_file);

    const auto set = windows_from_manifest(g, manifest_path, cfg);
    note(g, "training on " + std::to_string(set.windows.size()) + " windows from " + std::to_string(set.records) + " records");
    const auto result = gripnet::train(set.windows, cfg.train, init ? &*init : nullptr, [&](const gripnet::EpochStats& s) {
        if (!g.quiet)
            std::cerr << "epoch " << s.epoch << " train_loss " << s.train_loss << " train_acc " << s.train_accuracy << " test_loss "
                      << s.test_loss << " test_acc " << s.test_accuracy << '\n';
    });

    const fs::path out = out_file;
    const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
    ensure_dir(dir);
    gripnet::save_model(result.model, out);
    std::ofstream csv(dir / "curves.csv");
    if (!csv) fail(ErrorKind::Io, "cannot write curves.csv");
    csv << "epoch,train_loss,train_accuracy,test_loss,test_accuracy\n" << std::setprecision(10);
    for (const auto& s : result.curves)
        csv << s.epoch << ',' << s.train_loss << ',' << s.train_accuracy << ',' << s.test_loss << ',' << s.test_accuracy << '\n';
    csv.close();
    write_config(cfg, dir);
    const auto& best = result.curves.at(result.best_epoch - 1);
    std::cout << json{{"stage", std::string(gripnet::to_string(cfg.train.stage))},
                      {"windows", set.windows.size()},
                      {"epochs_run", result.curves.size()},
                      {"best_epoch", result.best_epoch},
                      {"stopped_early", result.stopped_early},
                      {"test_accuracy", best.test_accuracy},
                      {"test_loss", best.test_loss}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_file, const std::string& manifest_path, const std::string& out_file)
{
    const Config cfg = effective_config(g);
    const auto model = gripnet::load_model(model_file);
    const auto set = windows_from_manifest(g, manifest_path, cfg);
    const auto ev = gripnet::evaluate(model, set.windows);
    const json report{{"windows", set.windows.size()},
                      {"records", set.records},
                      {"skipped_records", set.skipped},
                      {"loss", ev.loss},
                      {"accuracy", ev.accuracy},
                      {"confusion", {{"true_pos", ev.true_pos}, {"false_pos", ev.false_pos}, {"true_neg", ev.true_neg}, {"false_neg", ev.false_neg}}}};
    if (!out_file.empty()) write_json(report, out_file);
    std::cout << report.dump(2) << '\n';
    return 0;
}

// --- replay / bench --------------------------------------------------------

int cmd_replay(const Globals& g, const std::string& strategy_text, const std::string& model_file, const std::string& record_dir,
               const std::string& out_dir)
{
    const Config cfg = effective_config(g);
    const auto tag = strategy::parse_strategy(strategy_text);
    const auto model = maybe_model(model_file);
    const auto record = load_record(record_dir);
    const auto trace = strategy::run_trace(make_strategy(tag, cfg, model), record, cfg.engine, model);
    ensure_dir(out_dir);
    strategy::write_trace_csv(trace, fs::path(out_dir) / "trace.csv");
    write_config(cfg, out_dir);
    json cf = json::object();
    for (const auto& [t, tick] : trace.counterfactual) cf[std::string(strategy::to_string(t))] = tick ? json(*tick) : json(nullptr);
    const auto lat = strategy::latency_audit(trace);
    std::cout << json{{"strategy", std::string(strategy::to_string(trace.strategy))},
                      {"release_tick", trace.release_tick ? json(*trace.release_tick) : json(nullptr)},
                      {"counterfactual", cf},
                      {"latency", {{"max_ms", lat.max_ms}, {"mean_ms", lat.mean_ms}, {"p99_ms", lat.p99_ms}, {"pass", lat.pass}}}}
                     .dump()
              << '\n';
    return 0;
}

std::vector<strategy::StrategyTag> parse_strategy_list(const std::string& text)
{
    std::vector<strategy::StrategyTag> tags;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) tags.push_back(strategy::parse_strategy(item));
    if (tags.empty()) fail(ErrorKind::Usage, "--strategies is empty");
    return tags;
}

int cmd_bench(const Globals& g, const std::string& corpus_dir, const std::string& model_file, const std::string& strategies,
              const std::string& out_dir)
{
    const Config cfg = effective_config(g);
    const auto model = maybe_model(model_file);
    std::vector<strategy::StrategyKind> kinds;
    for (auto tag : parse_strategy_list(strategies)) kinds.push_back(make_strategy(tag, cfg, model));
    const auto corpus = harness::load_corpus(corpus_dir);
    const auto report = harness::benchmark(kinds, corpus, cfg.engine);
    const fs::path dir = out_dir.empty() ? fs::path(corpus_dir) : fs::path(out_dir);
    ensure_dir(dir);
    const json j = harness::to_json(report);
    write_json(j, dir / "benchmark.json");
    write_config(cfg, dir);
    note(g, "wrote " + (dir / "benchmark.json").string());
    std::cout << json{{"records", report.rows.size()}, {"fastest_counts", j["fastest_counts"]}, {"never_triggered", report.never_triggered}}.dump()
              << '\n';
    return 0;
}

// --- gen / plan ------------------------------------------------------------

int cmd_gen(const Globals& g, const std::string& spec_file, std::size_t n, const std::string& out_dir)
{
    const Config cfg = effective_config(g);
    const auto tmpl = harness::load_spec_template(spec_file);
    std::vector<harness::Generated> items;
    std::vector<std::string> ids;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto spec = harness::draw_spec(tmpl, i);
        try {
            items.push_back(harness::generate(spec));
        } catch (const Error& e) {
            throw Error(e.kind(), "record " + std::to_string(i) + ": " + e.what());
        }
        std::ostringstream id;
        id << "rec_" << std::setw(5) << std::setfill('0') << i;
        ids.push_back(id.str());
    }
    harness::write_corpus(out_dir, items, ids);
    json specs = json::array();
    for (std::size_t i = 0; i < n; ++i) specs.push_back(harness::to_json(harness::draw_spec(tmpl, i)));
    write_json({{"template", tmpl.fields}, {"seed", tmpl.seed}, {"specs", specs}}, fs::path(out_dir) / "specs.json");
    write_config(cfg, out_dir);
    std::cout << json{{"records", n}, {"manifest", (fs::path(out_dir) / "manifest.json").string()}}.dump() << '\n';
    return 0;
}

int cmd_plan(const Globals& g, const std::string& waypoint_file, const std::string& category_text, const std::string& out_dir)
{
    const Config cfg = effective_config(g);
    const auto cat = features::parse_category(category_text);
    const auto waypoints = motion::load_waypoints(waypoint_file);
    const auto traj = motion::plan_reach(waypoints, cat, cfg.features.filter.sample_rate_hz);
    for (const auto& w : traj.warnings) note(g, "warning: " + w);
    ensure_dir(out_dir);
    motion::write_trajectory_csv(traj, fs::path(out_dir) / "trajectory.csv");
    write_config(cfg, out_dir);
    double peak_acc = 0.0, peak_speed = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        peak_acc = std::max(peak_acc, traj.acceleration[i].norm());
        peak_speed = std::max(peak_speed, traj.velocity[i].norm());
    }
    std::cout << json{{"category", std::string(features::to_string(cat))},
                      {"duration_s", traj.duration()},
                      {"samples", traj.size()},
                      {"peak_speed_mps", peak_speed},
                      {"peak_accel_mps2", peak_acc},
                      {"accel_cap_mps2", motion::profile(cat).max_accel_cap}}
                     .dump()
              << '\n';
    return 0;
}

// --- serve -----------------------------------------------------------------

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

int cmd_serve(const Globals& g, const std::string& host, int port, const std::string& strategy_text, const std::string& model_file)
{
    const Config cfg = effective_config(g);
    const auto tag = strategy::parse_strategy(strategy_text);
    const auto model = maybe_model(model_file);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    serve::run_server(
        {host, port}, [&] { return serve::StreamSession(tag, cfg, model); }, g_stop,
        [&](int bound) {
            std::cout << "listening on " << host << ':' << bound << std::endl;
        });
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Handover analysis, grip-release strategies and synthetic benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_file, "JSON config layered over the built-in defaults")->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "override one config value, e.g. --set strategy.pull.threshold_n=5");
    app.add_flag("-q,--quiet", g.quiet, "suppress progress messages");

    std::function<int()> run;

    std::string session_dir, out_dir, manifest, stage, model_file, init_file, record_dir, strategy_text = "gr2", corpus_dir, spec_file,
                                                                                  waypoint_file, category, strategies = "gr2,loadshare,pull",
                                                                                  host = "127.0.0.1", eval_out;
    std::size_t count = 100;
    int port = 0;

    auto* segment = app.add_subcommand("segment", "cut a session recording into handover records");
    segment->add_option("session", session_dir, "session directory")->required();
    segment->add_option("--out", out_dir, "output directory")->required();
    segment->callback([&] { run = [&] { return cmd_segment(g, session_dir, out_dir); }; });

    auto* analyze = app.add_subcommand("analyze", "compute per-record features and dataset statistics");
    analyze->add_option("manifest", manifest, "dataset manifest")->required();
    analyze->add_option("--out", out_dir, "output directory")->required();
    analyze->callback([&] { run = [&] { return cmd_analyze(g, manifest, out_dir); }; });

    auto* train = app.add_subcommand("train", "train the grip-release classifier");
    train->add_option("--stage", stage, "pretrain or finetune")->required();
    train->add_option("--manifest", manifest, "training records")->required();
    train->add_option("--out", out_dir, "model file to write")->required();
    train->add_option("--init", init_file, "starting model (required for finetune)");
    train->callback([&] { run = [&] { return cmd_train(g, stage, manifest, out_dir, init_file); }; });

    auto* evaluate = app.add_subcommand("evaluate", "accuracy and confusion counts of a model on a dataset");
    evaluate->add_option("--model", model_file, "model file")->required();
    evaluate->add_option("--manifest", manifest, "records to evaluate")->required();
    evaluate->add_option("--out", eval_out, "also write the report to this JSON file");
    evaluate->callback([&] { run = [&] { return cmd_evaluate(g, model_file, manifest, eval_out); }; });

    auto* replay = app.add_subcommand("replay", "run one strategy over a record and write trace.csv");
    replay->add_option("--strategy", strategy_text, "gr2, loadshare or pull")->required();
    replay->add_option("--model", model_file, "classifier for gr2 on heavy objects");
    replay->add_option("--record", record_dir, "record directory")->required();
    replay->add_option("--out", out_dir, "output directory")->default_val(".");
    replay->callback([&] { run = [&] { return cmd_replay(g, strategy_text, model_file, record_dir, out_dir); }; });

    auto* bench = app.add_subcommand("bench", "compare strategies over a corpus and write benchmark.json");
    bench->add_option("--corpus", corpus_dir, "corpus directory or manifest")->required();
    bench->add_option("--model", model_file, "classifier for gr2 on heavy objects");
    bench->add_option("--strategies", strategies, "comma-separated list")->default_val("gr2,loadshare,pull");
    bench->add_option("--out", out_dir, "output directory (defaults to the corpus directory)");
    bench->callback([&] { run = [&] { return cmd_bench(g, corpus_dir, model_file, strategies, out_dir); }; });

    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with ground truth");
    gen->add_option("--spec", spec_file, "generator spec JSON")->required();
    gen->add_option("--n", count, "number of records")->default_val(100)->check(CLI::PositiveNumber);
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->callback([&] { run = [&] { return cmd_gen(g, spec_file, count, out_dir); }; });

    auto* plan = app.add_subcommand("plan", "plan a weight-adapted min-jerk reach and write trajectory.csv");
    plan->add_option("--waypoints", waypoint_file, "waypoint JSON")->required();
    plan->add_option("--category", category, "low, moderate or high")->required();
    plan->add_option("--out", out_dir, "output directory")->default_val(".");
    plan->callback([&] { run = [&] { return cmd_plan(g, waypoint_file, category, out_dir); }; });

    auto* srv = app.add_subcommand("serve", "streaming decision server (NDJSON over TCP)");
    srv->add_option("--port", port, "TCP port (0 picks one)")->default_val(0);
    srv->add_option("--host", host, "IPv4 address to bind")->default_val("127.0.0.1");
    srv->add_option("--strategy", strategy_text, "gr2, loadshare or pull")->default_val("gr2");
    srv->add_option("--model", model_file, "classifier for gr2 on heavy objects");
    srv->callback([&] { run = [&] { return cmd_serve(g, host, port, strategy_text, model_file); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code(ErrorKind::Usage);
    }

    try {
        return run();
    } catch (const Error& e) {
        std::cerr << "handover: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error (format): " << e.what() << '\n';
        return exit_code(ErrorKind::Format);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error (io): " << e.what() << '\n';
        return exit_code(ErrorKind::Io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
