// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/app/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlaprune/engine.hpp"
#include "vlaprune/error.hpp"
#include "vlaprune/flops.hpp"
#include "vlaprune/metrics.hpp"
#include "vlaprune/mmdp_oracle.hpp"
#include "vlaprune/synth.hpp"

#ifndef VLAPRUNE_VERSION
#define VLAPRUNE_VERSION "0.0.0"
#endif

namespace vlaprune::app {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Writes `text` to `path`, or to `out` when the path is "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text << '\n';
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw Error("cannot open '" + path + "' for writing");
    }
    file << text << '\n';
    if (!file) {
        throw Error("failed writing '" + path + "'");
    }
}

ModelDims preset_or_throw(const std::string& name) {
    auto dims = model_preset(name);
    if (!dims) {
        throw ConfigError("unknown model preset '" + name + "'");
    }
    return *dims;
}

json dims_to_json(const ModelDims& d) {
    json j{{"layers", d.layers},       {"prune_layer", d.prune_layer},     {"hidden", d.hidden},
           {"ffn", d.ffn},             {"text_tokens", d.text_tokens},     {"visual_tokens", d.visual_tokens},
           {"retain_ratio", d.retain_ratio}, {"pruned_length", d.pruned_length()}};
    return j;
}

json flops_to_json(const ModelDims& d) {
    return json{{"full", flops_full(d)}, {"pruned", flops_pruned(d)}, {"ratio", flops_ratio(d)}};
}

json overhead_to_json(const ModelDims& d, std::uint64_t window, std::uint64_t embed_dim) {
    const SelectionOverhead o = selection_overhead(d, window, embed_dim);
    return json{{"smoothing", o.smoothing},
                {"filtering", o.filtering},
                {"total", o.total()},
                {"fraction_of_pruned", static_cast<double>(o.total()) / static_cast<double>(flops_pruned(d))}};
}

// ---------------------------------------------------------------------------------------------------------
// gen

struct GenOptions {
    SynthConfig synth;
    std::size_t shift_every = 0;
    TraceHeader header;
    std::string payload = "scored";
    std::string decode_mode = "chunk";
    std::string episode_id;
    std::string out;
};

void add_gen(CLI::App& app, GenOptions& o) {
    o.header.m_visual = 256;
    o.header.n_text = 45;
    o.header.layers = 4;
    o.header.embed_dim = 64;
    app.add_option("--seed", o.synth.seed, "generator seed")->capture_default_str();
    app.add_option("--frames", o.synth.frames, "frames in the episode")->capture_default_str();
    app.add_option("--m", o.header.m_visual, "visual tokens M")->capture_default_str();
    app.add_option("--n", o.header.n_text, "text tokens N (proprioception included)")->capture_default_str();
    app.add_option("--layers", o.header.layers, "recorded decode layers")->capture_default_str();
    app.add_option("--embed-dim", o.header.embed_dim, "embedding width")->capture_default_str();
    app.add_option("--payload", o.payload, "raw|scored")->capture_default_str();
    app.add_option("--decode-mode", o.decode_mode, "autoregressive|chunk|flow_averaged")->capture_default_str();
    app.add_option("--decode-rows", o.synth.decode_rows, "action query rows per layer (raw)")->capture_default_str();
    app.add_option("--drift-sigma", o.synth.drift_sigma, "random-walk step on action logits")->capture_default_str();
    app.add_option("--noise-sigma", o.synth.noise_sigma, "per-frame logit noise")->capture_default_str();
    app.add_option("--shift-every", o.shift_every, "abrupt target switch period (0 = never)")->capture_default_str();
    app.add_option("--episode-id", o.episode_id, "episode identifier (default episode-<seed>)");
    app.add_option("--out", o.out, "output .vlat path, '-' for stdout")->required();
}

int run_gen(GenOptions& o, std::ostream& out) {
    o.header.payload = parse_payload_kind(o.payload);
    o.header.decode_mode = parse_decode_mode(o.decode_mode);
    o.header.episode_id = o.episode_id.empty() ? "episode-" + std::to_string(o.synth.seed) : o.episode_id;
    if (o.shift_every > 0) {
        o.synth.shift_every = o.shift_every;
    }
    const std::vector<Frame> frames = synthesize_trace(o.synth, o.header);
    std::ostringstream buffer;
    write_trace(buffer, o.header, frames);
    const std::string bytes = buffer.str();
    if (o.out == "-") {
        out << bytes;
        return kExitOk;
    }
    std::ofstream file(o.out, std::ios::binary);
    if (!file || !(file << bytes) || !file.flush()) {
        throw Error("failed writing '" + o.out + "'");
    }
    json summary{{"out", o.out},
                 {"episode_id", o.header.episode_id},
                 {"frames", frames.size()},
                 {"trace_checksum", checksum_bytes(bytes)}};
    out << summary.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------------------
// prune

struct PruneOptions {
    std::vector<std::string> traces;
    std::string out = "-";
    double ratio = 0.5;
    std::size_t budget = 0;
    std::string variant = "dual";
    double fusion_weight = 0.5;
    std::string warmup = "retain-all";
    std::string mode = "window";
    EstimatorConfig estimator;
    std::size_t prune_layer = 3;
    std::string preset = "openvla-7b";
    bool overhead = false;
    std::size_t jobs = 1;
    CLI::Option* budget_opt = nullptr;
};

void add_prune(CLI::App& app, PruneOptions& o) {
    app.add_option("--trace", o.traces, "input .vlat trace(s), one episode each")->required();
    app.add_option("--out", o.out, "manifest path, '-' for stdout")->capture_default_str();
    auto* ratio = app.add_option("--ratio", o.ratio, "retention ratio rho in (0, 1]")->capture_default_str();
    o.budget_opt = app.add_option("--budget", o.budget, "retained token count (overrides --ratio)");
    o.budget_opt->excludes(ratio);
    app.add_option("--variant", o.variant, "dual|prefill-only|action-only|score-fusion|diversity-only")
        ->capture_default_str();
    app.add_option("--fusion-weight", o.fusion_weight, "semantic weight for score-fusion")->capture_default_str();
    app.add_option("--warmup", o.warmup, "retain-all|prefill-only")->capture_default_str();
    app.add_option("--mode", o.mode, "ema|window")->capture_default_str();
    app.add_option("--alpha", o.estimator.alpha, "EMA smoothing factor")->capture_default_str();
    app.add_option("--window", o.estimator.window, "decaying-window size w")->capture_default_str();
    app.add_option("--gamma", o.estimator.gamma, "decaying-window rate")->capture_default_str();
    app.add_option("--k", o.prune_layer, "prune before this layer (1-based)")->capture_default_str();
    app.add_option("--preset", o.preset, "model dims for the FLOPs summary")->capture_default_str();
    app.add_flag("--overhead", o.overhead, "add a selection-overhead estimate to the FLOPs summary");
    app.add_option("--jobs", o.jobs, "episodes replayed concurrently")->capture_default_str();
}

struct EpisodeOutput {
    json record;
    double elapsed_ms = 0.0;
    std::size_t degenerate_rows = 0;
};

EpisodeOutput prune_episode(const std::string& path, const PruneOptions& o, const PruneConfig& base,
                            const EstimatorConfig& estimator) {
    const auto start = Clock::now();
    const std::string checksum = checksum_file(path);
    const Trace trace = read_trace(std::filesystem::path(path));
    const std::size_t m = trace.header.m_visual;

    PruneConfig prune = base;
    prune.budget = o.budget_opt->count() > 0 ? o.budget : budget_from_ratio(o.ratio, m);
    prune.validate(m);

    ModelDims dims = preset_or_throw(o.preset);
    dims.text_tokens = trace.header.n_text;
    dims.visual_tokens = m;
    dims.prune_layer = prune.prune_layer;
    dims.retain_ratio = static_cast<double>(prune.budget) / static_cast<double>(m);
    dims.retained_visual = prune.budget;

    const std::vector<FrameSelection> selections = replay_episode(trace, prune, estimator);

    EpisodeOutput result;
    json frames = json::array();
    double pool_sum = 0.0;
    double distance_sum = 0.0;
    std::size_t pruned = 0;
    for (const auto& fs : selections) {
        const SelectionResult& s = fs.selection;
        frames.push_back(json{{"t", fs.timestep},
                              {"retained", s.retained},
                              {"pool_size", s.pool_size},
                              {"c_vl_size", s.c_vl.size()},
                              {"c_act_size", s.c_act.size()},
                              {"min_pairwise_distance", s.min_pairwise_distance},
                              {"warmup_applied", s.warmup_applied},
                              {"degenerate_rows", s.degenerate_rows}});
        result.degenerate_rows += s.degenerate_rows;
        if (!s.warmup_applied) {
            ++pruned;
            pool_sum += static_cast<double>(s.pool_size);
            distance_sum += s.min_pairwise_distance;
        }
    }
    json flops = flops_to_json(dims);
    if (o.overhead) {
        flops["overhead"] = overhead_to_json(dims, estimator.window, trace.header.embed_dim);
    }
    const double denom = pruned > 0 ? static_cast<double>(pruned) : 1.0;
    result.record = json{{"trace", path},
                         {"trace_checksum", checksum},
                         {"episode_id", trace.header.episode_id},
                         {"m_visual", m},
                         {"n_text", trace.header.n_text},
                         {"budget", prune.budget},
                         {"frames", std::move(frames)},
                         {"aggregate",
                          {{"frames", selections.size()},
                           {"pruned_frames", pruned},
                           {"warmup_frames", selections.size() - pruned},
                           {"mean_pool_size", pool_sum / denom},
                           {"mean_min_distance", distance_sum / denom},
                           {"flops", std::move(flops)}}}};
    result.elapsed_ms = elapsed_ms(start);
    return result;
}

int run_prune(PruneOptions& o, std::ostream& out, std::ostream& err) {
    const auto start = Clock::now();
    PruneConfig base;
    base.variant = parse_selector_variant(o.variant);
    base.warmup = parse_warmup_policy(o.warmup);
    base.fusion_weight = o.fusion_weight;
    base.prune_layer = o.prune_layer;
    EstimatorConfig estimator = o.estimator;
    estimator.mode = parse_estimator_mode(o.mode);
    estimator.validate();
    if (o.budget_opt->count() == 0) {
        budget_from_ratio(o.ratio, 1);  // validates the ratio before touching any trace
    }
    preset_or_throw(o.preset);
    if (o.jobs == 0) {
        throw ConfigError("--jobs must be at least 1");
    }

    // Episodes run on up to `jobs` workers; results are collected in input order.
    std::vector<EpisodeOutput> episodes(o.traces.size());
    for (std::size_t first = 0; first < o.traces.size(); first += o.jobs) {
        const std::size_t last = std::min(first + o.jobs, o.traces.size());
        std::vector<std::future<EpisodeOutput>> pending;
        for (std::size_t i = first; i < last; ++i) {
            pending.push_back(std::async(std::launch::async, prune_episode, std::cref(o.traces[i]), std::cref(o),
                                         std::cref(base), std::cref(estimator)));
        }
        for (std::size_t i = first; i < last; ++i) {
            episodes[i] = pending[i - first].get();
        }
    }

    json config{{"traces", o.traces},
                {"variant", to_string(base.variant)},
                {"warmup", to_string(base.warmup)},
                {"fusion_weight", base.fusion_weight},
                {"prune_layer", base.prune_layer},
                {"preset", o.preset},
                {"overhead", o.overhead},
                {"estimator",
                 {{"mode", to_string(estimator.mode)},
                  {"alpha", estimator.alpha},
                  {"window", estimator.window},
                  {"gamma", estimator.gamma}}}};
    if (o.budget_opt->count() > 0) {
        config["budget"] = o.budget;
    } else {
        config["ratio"] = o.ratio;
    }

    json episode_records = json::array();
    json per_episode_ms = json::array();
    for (auto& e : episodes) {
        if (e.degenerate_rows > 0) {
            err << "warning: " << e.record["trace"].get<std::string>() << ": " << e.degenerate_rows
                << " zero-norm embedding rows treated as fully redundant\n";
        }
        per_episode_ms.push_back(e.elapsed_ms);
        episode_records.push_back(std::move(e.record));
    }
    json manifest{{"engine_version", engine_version()},
                  {"config", std::move(config)},
                  {"episodes", std::move(episode_records)},
                  {"timing", {{"total_ms", elapsed_ms(start)}, {"per_episode_ms", std::move(per_episode_ms)}}}};
    emit(o.out, manifest.dump(2), out);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::string trace;
    std::vector<std::size_t> ks;
    std::string out = "-";
};

void add_analyze(CLI::App& app, AnalyzeOptions& o) {
    app.add_option("--trace", o.trace, "input .vlat trace")->required();
    app.add_option("--k", o.ks, "top-k sizes (default M/8, M/4, M/2)")->delimiter(',');
    app.add_option("--out", o.out, "report path, '-' for stdout")->capture_default_str();
}

int run_analyze(AnalyzeOptions& o, std::ostream& out) {
    const std::string checksum = checksum_file(o.trace);
    const Trace trace = read_trace(std::filesystem::path(o.trace));
    const std::vector<std::size_t> ks = o.ks.empty() ? default_overlap_ks(trace.header.m_visual) : o.ks;
    for (std::size_t k : ks) {
        if (k == 0 || k > trace.header.m_visual) {
            throw ConfigError("--k " + std::to_string(k) + " outside [1, " + std::to_string(trace.header.m_visual) +
                              "]");
        }
    }

    EstimatorConfig window;
    EstimatorConfig last_frame;
    last_frame.window = 1;
    last_frame.gamma = 1.0;

    json reports = json::array();
    json tracking = json::array();
    for (std::size_t k : ks) {
        const OverlapReport r = episode_overlap_report(trace, k);
        reports.push_back(json{{"k", r.k},
                               {"prefill_vs_decode", r.prefill_vs_decode},
                               {"decode_t_vs_tminus1", r.decode_t_vs_tminus1},
                               {"means",
                                {{"prefill_vs_decode", r.mean_prefill_vs_decode},
                                 {"decode_t_vs_tminus1", r.mean_decode_t_vs_tminus1}}}});
        if (trace.frames.size() > window.window) {
            const TrackingReport smoothed = estimator_tracking(trace, window, k, window.window);
            const TrackingReport previous = estimator_tracking(trace, last_frame, k, window.window);
            tracking.push_back(json{{"k", k},
                                    {"window", {{"w", window.window}, {"gamma", window.gamma}, {"mean", smoothed.mean}}},
                                    {"last_frame", {{"mean", previous.mean}}}});
        }
    }
    json report{{"trace", o.trace},
                {"trace_checksum", checksum},
                {"episode_id", trace.header.episode_id},
                {"frames", trace.frames.size()},
                {"m_visual", trace.header.m_visual},
                {"overlap", std::move(reports)},
                {"estimator_tracking", std::move(tracking)}};
    emit(o.out, report.dump(2), out);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------------------
// flops

struct FlopsOptions {
    std::string preset = "openvla-7b";
    std::uint64_t n_text = 0;
    double ratio = 1.0;
    std::uint64_t prune_layer = 3;
    std::optional<std::uint64_t> layers;
    std::optional<std::uint64_t> hidden;
    std::optional<std::uint64_t> ffn;
    std::optional<std::uint64_t> m_visual;
    bool overhead = false;
    std::uint64_t window = 3;
    std::optional<std::uint64_t> embed_dim;
};

void add_flops(CLI::App& app, FlopsOptions& o) {
    app.add_option("--preset", o.preset, "model dims preset")->capture_default_str();
    app.add_option("--n-text", o.n_text, "text tokens N (proprioception included)")->required();
    app.add_option("--ratio", o.ratio, "retention ratio rho in (0, 1]")->required();
    app.add_option("--k", o.prune_layer, "prune before this layer (1-based)")->capture_default_str();
    app.add_option("--layers", o.layers, "override layer count T");
    app.add_option("--hidden", o.hidden, "override hidden size d");
    app.add_option("--ffn", o.ffn, "override FFN size m");
    app.add_option("--m", o.m_visual, "override visual token count M");
    app.add_flag("--overhead", o.overhead, "add a selection-overhead estimate");
    app.add_option("--window", o.window, "smoothing window for the overhead estimate")->capture_default_str();
    app.add_option("--embed-dim", o.embed_dim, "embedding width for the overhead estimate (default hidden)");
}

int run_flops(FlopsOptions& o, std::ostream& out) {
    ModelDims dims = preset_or_throw(o.preset);
    dims.text_tokens = o.n_text;
    dims.retain_ratio = o.ratio;
    dims.prune_layer = o.prune_layer;
    dims.layers = o.layers.value_or(dims.layers);
    dims.hidden = o.hidden.value_or(dims.hidden);
    dims.ffn = o.ffn.value_or(dims.ffn);
    dims.visual_tokens = o.m_visual.value_or(dims.visual_tokens);
    dims.validate();
    json report = flops_to_json(dims);
    report["preset"] = o.preset;
    report["dims"] = dims_to_json(dims);
    if (o.overhead) {
        report["overhead"] = overhead_to_json(dims, o.window, o.embed_dim.value_or(dims.hidden));
    }
    out << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------------------
// oracle

struct OracleOptions {
    std::string embeddings;
    std::vector<std::size_t> pool;
    std::size_t target = 0;
};

void add_oracle(CLI::App& app, OracleOptions& o) {
    app.add_option("--embeddings", o.embeddings, "JSON file: array of rows, or {\"embeddings\": [...]}")->required();
    app.add_option("--pool", o.pool, "candidate indices (default all rows)")->delimiter(',');
    app.add_option("--target", o.target, "subset size")->required();
}

Embeddings load_embeddings_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open embeddings file '" + path + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValueError("embeddings file is not valid JSON: " + std::string(e.what()));
    }
    const json& rows = doc.is_object() ? doc.at("embeddings") : doc;
    if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
        throw ShapeError("embeddings must be a non-empty array of numeric rows");
    }
    const std::size_t dim = rows.front().size();
    std::vector<float> values;
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != dim) {
            throw ShapeError("embedding rows must share one width");
        }
        for (const auto& x : row) {
            if (!x.is_number()) {
                throw ValueError("embedding entries must be numbers");
            }
            values.push_back(x.get<float>());
        }
    }
    return Embeddings(rows.size(), dim, std::move(values));
}

int run_oracle(OracleOptions& o, std::ostream& out) {
    const Embeddings emb = load_embeddings_json(o.embeddings);
    IndexSet pool = o.pool;
    if (pool.empty()) {
        pool.resize(emb.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            pool[i] = i;
        }
    }
    std::sort(pool.begin(), pool.end());
    const OracleSolution exact = solve_exact(emb, pool, o.target);
    const FilterResult greedy = min_redundancy_filter(emb, pool, o.target);
    const double greedy_distance = greedy.selected.size() < 2 ? 2.0 : greedy.min_pairwise_distance;
    json report{{"subset", exact.subset},
                {"optimum", exact.optimum},
                {"greedy", {{"subset", greedy.selected}, {"min_pairwise_distance", greedy_distance}}}};
    out << report.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------------------
// bench

struct BenchOptions {
    std::vector<std::size_t> ms{256, 512};
    std::size_t frames = 300;
    double ratio = 0.25;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 64;
    std::size_t layers = 4;
    std::string variant = "dual";
};

void add_bench(CLI::App& app, BenchOptions& o) {
    app.add_option("--m", o.ms, "visual token counts to benchmark")->delimiter(',')->capture_default_str();
    app.add_option("--frames", o.frames, "frames per synthetic episode")->capture_default_str();
    app.add_option("--ratio", o.ratio, "retention ratio")->capture_default_str();
    app.add_option("--seed", o.seed, "generator seed")->capture_default_str();
    app.add_option("--embed-dim", o.embed_dim, "embedding width")->capture_default_str();
    app.add_option("--layers", o.layers, "recorded decode layers")->capture_default_str();
    app.add_option("--variant", o.variant, "selector variant")->capture_default_str();
}

double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) {
        return 0.0;
    }
    const auto rank = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5);
    return sorted[std::min(rank, sorted.size() - 1)];
}

int run_bench(BenchOptions& o, std::ostream& out) {
    PruneConfig base;
    base.variant = parse_selector_variant(o.variant);
    const EstimatorConfig estimator;
    json results = json::array();
    for (std::size_t m : o.ms) {
        TraceHeader header;
        header.m_visual = m;
        header.n_text = 45;
        header.layers = o.layers;
        header.embed_dim = o.embed_dim;
        header.episode_id = "bench";
        SynthConfig synth;
        synth.seed = o.seed;
        synth.frames = o.frames;
        const std::vector<Frame> frames = synthesize_trace(synth, header);

        // Scoring and embedding unpacking are trace plumbing; only selection and history updates are timed.
        std::vector<FrameScores> scores;
        std::vector<Embeddings> embeddings;
        for (const Frame& f : frames) {
            scores.push_back(score_frame(header, f, pruning_decode_layers(header)));
            embeddings.push_back(frame_embeddings(header, f));
        }
        PruneConfig prune = base;
        prune.budget = budget_from_ratio(o.ratio, m);
        prune.validate(m);
        Session session(prune, estimator);
        std::vector<double> micros;
        double pool_sum = 0.0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto start = Clock::now();
            const SelectionResult r = session.select(scores[i].semantic, embeddings[i]);
            session.observe(scores[i].action);
            const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
            if (!r.warmup_applied) {
                micros.push_back(us);
                pool_sum += static_cast<double>(r.pool_size);
            }
        }
        std::vector<double> sorted = micros;
        std::sort(sorted.begin(), sorted.end());
        const double n = micros.empty() ? 1.0 : static_cast<double>(micros.size());
        double total = 0.0;
        for (double us : micros) {
            total += us;
        }
        results.push_back(json{{"m", m},
                               {"frames", frames.size()},
                               {"timed_frames", micros.size()},
                               {"budget", prune.budget},
                               {"variant", to_string(prune.variant)},
                               {"mean_pool_size", pool_sum / n},
                               {"mean_us", total / n},
                               {"p50_us", percentile(sorted, 0.5)},
                               {"p95_us", percentile(sorted, 0.95)},
                               {"max_us", sorted.empty() ? 0.0 : sorted.back()}});
    }
    out << json{{"engine_version", engine_version()}, {"results", std::move(results)}}.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

const char* engine_version() {
    return VLAPRUNE_VERSION;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trace-driven dual-level visual token pruning engine", "vlaprune"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(engine_version()));

    GenOptions gen;
    PruneOptions prune;
    AnalyzeOptions analyze;
    FlopsOptions flops;
    OracleOptions oracle;
    BenchOptions bench;
    auto* gen_cmd = app.add_subcommand("gen", "synthesize an episode trace");
    add_gen(*gen_cmd, gen);
    auto* prune_cmd = app.add_subcommand("prune", "replay traces through the pruning engine");
    add_prune(*prune_cmd, prune);
    auto* analyze_cmd = app.add_subcommand("analyze", "top-k overlap diagnostics of a trace");
    add_analyze(*analyze_cmd, analyze);
    auto* flops_cmd = app.add_subcommand("flops", "theoretical FLOPs of full vs pruned inference");
    add_flops(*flops_cmd, flops);
    auto* oracle_cmd = app.add_subcommand("oracle", "exact max-min diversity subset of a small pool");
    add_oracle(*oracle_cmd, oracle);
    auto* bench_cmd = app.add_subcommand("bench", "per-frame selection latency on synthetic episodes");
    add_bench(*bench_cmd, bench);

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("vlaprune");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) {
            return run_gen(gen, out);
        }
        if (prune_cmd->parsed()) {
            return run_prune(prune, out, err);
        }
        if (analyze_cmd->parsed()) {
            return run_analyze(analyze, out);
        }
        if (flops_cmd->parsed()) {
            return run_flops(flops, out);
        }
        if (oracle_cmd->parsed()) {
            return run_oracle(oracle, out);
        }
        if (bench_cmd->parsed()) {
            return run_bench(bench, out);
        }
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace vlaprune::app
