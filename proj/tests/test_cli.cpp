// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "vlaprune/app/cli.hpp"
#include "vlaprune/engine.hpp"
#include "vlaprune/trace.hpp"

using namespace vlaprune;
using nlohmann::json;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = app::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

json cli_json(const std::vector<std::string>& args) {
    const Run r = cli(args);
    INFO(r.err);
    REQUIRE(r.code == app::kExitOk);
    return json::parse(r.out);
}

/// Generates a trace; `overrides` are flag/value pairs replacing the defaults below.
std::string gen(const vlaprune::testing::TempDir& dir, const std::string& name,
                std::vector<std::pair<std::string, std::string>> overrides = {}) {
    const std::string path = (dir / name).string();
    std::vector<std::pair<std::string, std::string>> flags{
        {"--seed", "7"}, {"--frames", "20"}, {"--m", "64"}, {"--n", "45"}, {"--out", path}};
    for (const auto& [flag, value] : overrides) {
        auto it = std::find_if(flags.begin(), flags.end(), [&](const auto& f) { return f.first == flag; });
        if (it != flags.end()) {
            it->second = value;
        } else {
            flags.emplace_back(flag, value);
        }
    }
    std::vector<std::string> args{"gen"};
    for (const auto& [flag, value] : flags) {
        args.push_back(flag);
        args.push_back(value);
    }
    const Run r = cli(args);
    INFO(r.err);
    REQUIRE(r.code == app::kExitOk);
    return path;
}

}  // namespace

TEST_CASE("gen writes a readable trace and reports its checksum") {
    vlaprune::testing::TempDir dir;
    const std::string path = (dir / "a.vlat").string();
    const json summary = cli_json({"gen", "--seed", "1", "--frames", "5", "--m", "16", "--out", path});
    CHECK(summary["frames"] == 5);
    CHECK(summary["trace_checksum"] == checksum_file(path));
    const Trace t = read_trace(std::filesystem::path(path));
    CHECK(t.header.m_visual == 16);
    CHECK(t.frames.size() == 5);

    const Run to_stdout = cli({"gen", "--seed", "1", "--frames", "5", "--m", "16", "--out", "-"});
    CHECK(to_stdout.code == 0);
    std::ifstream in(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(to_stdout.out == bytes);
}

TEST_CASE("prune retains exactly the budget on every pruned frame") {
    vlaprune::testing::TempDir dir;
    const std::string path = gen(dir, "ep.vlat");
    const json m = cli_json({"prune", "--trace", path, "--ratio", "0.5"});
    const json& ep = m["episodes"][0];
    CHECK(ep["budget"] == 32);
    CHECK(ep["trace_checksum"] == checksum_file(path));
    for (const auto& f : ep["frames"]) {
        if (f["warmup_applied"].get<bool>()) {
            CHECK(f["retained"].size() == 64);
        } else {
            CHECK(f["retained"].size() == 32);
        }
    }
    CHECK(ep["aggregate"]["warmup_frames"] == 3);
    CHECK(ep["aggregate"]["pruned_frames"] == 17);
    CHECK(m["config"]["variant"] == "dual");
    CHECK(m.contains("timing"));
}

TEST_CASE("prefill-only selection ignores the action stream") {
    vlaprune::testing::TempDir dir;
    const std::string a = gen(dir, "a.vlat", {{"--drift-sigma", "0.05"}});
    const std::string b = gen(dir, "b.vlat", {{"--drift-sigma", "0.5"}, {"--shift-every", "4"}});
    // Different action dynamics; the retained sets must follow the semantic scores alone.
    for (const std::string& path : {a, b}) {
        const json m = cli_json({"prune", "--trace", path, "--ratio", "0.25", "--variant", "prefill-only"});
        const Trace t = read_trace(std::filesystem::path(path));
        const auto& frames = m["episodes"][0]["frames"];
        for (std::size_t i = 3; i < t.frames.size(); ++i) {
            const FrameScores s = score_frame(t.header, t.frames[i], pruning_decode_layers(t.header));
            CHECK(frames[i]["retained"].get<IndexSet>() == top_k_indices(s.semantic, 16));
        }
    }
}

TEST_CASE("manifest selections match a direct session replay") {
    vlaprune::testing::TempDir dir;
    const std::string path = gen(dir, "ep.vlat", {{"--payload", "raw"}, {"--m", "36"}, {"--decode-rows", "2"}});
    const json m = cli_json({"prune", "--trace", path, "--budget", "9", "--mode", "ema", "--alpha", "0.3"});
    const Trace t = read_trace(std::filesystem::path(path));
    PruneConfig prune;
    prune.budget = 9;
    EstimatorConfig est;
    est.mode = EstimatorMode::Ema;
    est.alpha = 0.3;
    Session session(prune, est);
    const auto& frames = m["episodes"][0]["frames"];
    REQUIRE(frames.size() == t.frames.size());
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
        const FrameScores s = score_frame(t.header, t.frames[i], pruning_decode_layers(t.header));
        const SelectionResult r = session.select(s.semantic, frame_embeddings(t.header, t.frames[i]));
        CHECK(frames[i]["retained"].get<IndexSet>() == r.retained);
        CHECK(frames[i]["pool_size"] == r.pool_size);
        session.observe(s.action);
    }
}

TEST_CASE("prune reports FLOPs for the resolved budget") {
    vlaprune::testing::TempDir dir;
    const std::string path = gen(dir, "ep.vlat", {{"--m", "256"}});
    const json m = cli_json({"prune", "--trace", path, "--ratio", "0.125", "--overhead"});
    const json& flops = m["episodes"][0]["aggregate"]["flops"];
    CHECK(std::abs(flops["ratio"].get<double>() - 0.30) <= 0.025);
    CHECK(flops["overhead"]["total"].get<std::uint64_t>() > 0);
}

TEST_CASE("multiple traces across workers keep input order") {
    vlaprune::testing::TempDir dir;
    const std::string a = gen(dir, "a.vlat");
    const std::string b = gen(dir, "b.vlat", {{"--seed", "8"}, {"--episode-id", "second"}});
    const json m = cli_json({"prune", "--trace", a, "--trace", b, "--jobs", "2"});
    REQUIRE(m["episodes"].size() == 2);
    CHECK(m["episodes"][0]["trace"] == a);
    CHECK(m["episodes"][1]["episode_id"] == "second");
    const json serial = cli_json({"prune", "--trace", a, "--trace", b, "--jobs", "1"});
    CHECK(serial["episodes"] == m["episodes"]);
}

TEST_CASE("flops subcommand") {
    const json full = cli_json({"flops", "--n-text", "45", "--ratio", "1.0"});
    CHECK(full["ratio"] == 1.0);
    const json half = cli_json({"flops", "--n-text", "45", "--ratio", "0.5"});
    CHECK(std::abs(half["ratio"].get<double>() - 0.5976) <= 0.025);
    const json k1 = cli_json({"flops", "--n-text", "45", "--ratio", "0.5", "--k", "1", "--overhead"});
    CHECK(k1["ratio"].get<double>() < half["ratio"].get<double>());
    CHECK(k1.contains("overhead"));
}

TEST_CASE("oracle subcommand") {
    vlaprune::testing::TempDir dir;
    const std::string path = (dir / "emb.json").string();
    std::ofstream(path) << "[[1, 0], [0.98481, 0.17365], [0, 1], [-1, 0]]";
    const json r = cli_json({"oracle", "--embeddings", path, "--target", "2"});
    CHECK(r["subset"] == json::array({0, 3}));
    CHECK(r["optimum"].get<double>() == doctest::Approx(2.0));
    CHECK(r["greedy"]["subset"] == json::array({0, 3}));

    std::ofstream(path) << R"({"embeddings": [[1, 0], [0, 1], [1, 1]]})";
    CHECK(cli_json({"oracle", "--embeddings", path, "--pool", "0,2", "--target", "1"})["subset"] ==
          json::array({0}));

    std::string big = "[";
    for (int i = 0; i < 21; ++i) {
        big += (i ? ",[" : "[") + std::to_string(i + 1) + ",1]";
    }
    std::ofstream(path) << big << "]";
    CHECK(cli({"oracle", "--embeddings", path, "--target", "2"}).code == app::kExitUsage);
}

TEST_CASE("analyze subcommand") {
    vlaprune::testing::TempDir dir;
    const std::string path = gen(dir, "ep.vlat");
    const json r = cli_json({"analyze", "--trace", path});
    REQUIRE(r["overlap"].size() == 3);
    CHECK(r["overlap"][0]["k"] == 8);
    CHECK(r["overlap"][0]["decode_t_vs_tminus1"].size() == 19);
    const json custom = cli_json({"analyze", "--trace", path, "--k", "4,12"});
    CHECK(custom["overlap"].size() == 2);
    CHECK(cli({"analyze", "--trace", path, "--k", "65"}).code == app::kExitUsage);
}

TEST_CASE("bench subcommand") {
    const json r = cli_json({"bench", "--m", "64", "--frames", "20", "--embed-dim", "16"});
    REQUIRE(r["results"].size() == 1);
    CHECK(r["results"][0]["timed_frames"] == 17);
    CHECK(r["results"][0]["mean_us"].get<double>() > 0.0);
}

TEST_CASE("exit codes") {
    vlaprune::testing::TempDir dir;
    CHECK(cli({}).code == app::kExitUsage);
    CHECK(cli({"frobnicate"}).code == app::kExitUsage);
    CHECK(cli({"flops", "--ratio", "0.5"}).code == app::kExitUsage);
    CHECK(cli({"flops", "--n-text", "45", "--ratio", "1.5"}).code == app::kExitUsage);
    const std::string path = gen(dir, "ep.vlat");
    CHECK(cli({"prune", "--trace", path, "--variant", "bogus"}).code == app::kExitUsage);
    CHECK(cli({"prune", "--trace", path, "--budget", "0"}).code == app::kExitUsage);
    CHECK(cli({"prune", "--trace", path, "--ratio", "0.5", "--budget", "3"}).code == app::kExitUsage);
    CHECK(cli({"prune", "--trace", (dir / "missing.vlat").string()}).code == app::kExitData);

    const std::string broken = (dir / "broken.vlat").string();
    std::ofstream(broken) << "{\"format\":\"vlat\",\"version\":7}\n";
    const Run r = cli({"prune", "--trace", broken});
    CHECK(r.code == app::kExitData);
    CHECK(r.err.find("version") != std::string::npos);
    CHECK(cli({"--version"}).code == app::kExitOk);
}
