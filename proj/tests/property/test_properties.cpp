#include "doctest.h"
#include "../generators.hpp"
#include "../support.hpp"

#include <set>

#include "splitcall/adapter.hpp"
#include "splitcall/judge.hpp"
#include "splitcall/prompts.hpp"

using namespace splitcall;
using test::error_code_of;

namespace {

constexpr std::uint64_t kSeed = 20240917;

std::string random_identifier(std::mt19937_64& rng) {
    static const std::string alphabet = "abcxyzABZ019_.-";
    std::string s;
    for (std::size_t n = 1 + gen::pick(rng, 10); n > 0; --n) s += alphabet[gen::pick(rng, alphabet.size())];
    return s;
}

AdapterId random_adapter(std::mt19937_64& rng, std::size_t pool) {
    auto toolset = "ts" + std::to_string(gen::pick(rng, pool));
    switch (gen::pick(rng, 3)) {
    case 0: return AdapterId::base();
    case 1: return AdapterId::selector(toolset);
    default: return AdapterId::argument(toolset, "tool" + std::to_string(gen::pick(rng, pool)));
    }
}

} // namespace

TEST_CASE("every escape attempt is a sandbox violation") {
    std::mt19937_64 rng(kSeed);
    test::TempDir base;
    auto root = gen::escape_fixture(base.path());
    ToolHub hub;
    ToolsetConfig fs;
    fs.toolset_id = "filesystem";
    fs.sandbox.allowed_roots = {root};
    hub.register_toolset(fs);
    const std::vector<std::pair<std::string, std::string>> probes{
        {"read_file", "path"}, {"list_directory", "path"}, {"get_file_info", "path"}, {"directory_tree", "path"}};
    for (int i = 0; i < 500; ++i) {
        auto attempt = gen::random_escape(rng, base.path());
        const auto& [tool, key] = probes[gen::pick(rng, probes.size())];
        CAPTURE(attempt);
        CAPTURE(tool);
        CHECK(error_code_of([&] { hub.invoke("filesystem", tool, {{key, attempt}}); }) == Errc::sandbox_violation);
    }
    // the fixture itself is readable, so rejections are not blanket failures
    CHECK(hub.invoke("filesystem", "read_file", {{"path", "docs/ok.txt"}}).payload == "fine");
    CHECK(std::filesystem::exists(base / "secret.txt"));
}

TEST_CASE("enum completions are members or violations") {
    std::mt19937_64 rng(kSeed + 1);
    for (int i = 0; i < 2000; ++i) {
        std::set<std::string> unique;
        for (std::size_t n = 1 + gen::pick(rng, 8); n > 0; --n) unique.insert(random_identifier(rng));
        std::vector<std::string> options(unique.begin(), unique.end());
        std::string reply;
        switch (gen::pick(rng, 4)) {
        case 0: reply = options[gen::pick(rng, options.size())]; break;
        case 1: reply = "  " + options[gen::pick(rng, options.size())] + "\n"; break;
        case 2: reply = "\"" + options[gen::pick(rng, options.size())] + "\""; break;
        default: reply = gen::random_text(rng); break;
        }
        auto c = enforce_constraint(Constraint::one_of(options), {reply, Finish::stop});
        CAPTURE(reply);
        if (c.finish == Finish::constraint_violation) {
            CHECK(c.content.empty());
            CHECK(c.raw == reply);
        } else {
            CHECK(unique.count(c.content) == 1);
        }
    }
}

TEST_CASE("adapter ids round-trip") {
    std::mt19937_64 rng(kSeed + 2);
    for (int i = 0; i < 2000; ++i) {
        auto a = random_identifier(rng), b = random_identifier(rng);
        for (const auto& id : {AdapterId::base(), AdapterId::selector(a), AdapterId::argument(a, b)}) {
            CHECK(AdapterId::parse(id.serialize()) == id);
        }
        // arbitrary text either parses back to itself or is rejected
        auto text = gen::random_text(rng);
        if (gen::pick(rng, 2)) text = (gen::pick(rng, 2) ? "sel:" : "arg:") + text;
        std::optional<AdapterId> parsed;
        try {
            parsed = AdapterId::parse(text);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::invalid_argument);
        }
        if (parsed) CHECK(parsed->serialize() == text);
    }
}

TEST_CASE("adapter cache invariants") {
    std::mt19937_64 rng(kSeed + 3);
    for (int run = 0; run < 200; ++run) {
        AdapterCacheState state;
        state.capacity = 2 + gen::pick(rng, 6);
        bool base_loaded = false;
        for (int i = 0; i < 100; ++i) {
            auto id = random_adapter(rng, 5);
            auto before = state;
            auto r = ensure_loaded(id, state);
            state = r.state;
            const bool was_resident =
                std::find(before.loaded.begin(), before.loaded.end(), id) != before.loaded.end();
            CHECK(state.loaded.back() == id);
            CHECK(state.loaded.size() <= state.capacity);
            CHECK(std::set<AdapterId>(state.loaded.begin(), state.loaded.end()).size() == state.loaded.size());
            CHECK(state.load_events - state.evict_events == state.loaded.size());
            if (was_resident) {
                CHECK_FALSE(r.evicted);
                CHECK(state.load_events == before.load_events);
            }
            if (r.evicted) {
                CHECK(r.evicted->kind() != AdapterKind::base);
                // the victim was the least recently used non-base entry
                for (const auto& other : before.loaded) {
                    if (other.kind() == AdapterKind::base) continue;
                    CHECK(other == *r.evicted);
                    break;
                }
            }
            base_loaded = base_loaded || id.kind() == AdapterKind::base;
            if (base_loaded) {
                CHECK(std::count(state.loaded.begin(), state.loaded.end(), AdapterId::base()) == 1);
            }
        }
    }
}

TEST_CASE("masks reconstruct tool names and arguments") {
    std::mt19937_64 rng(kSeed + 4);
    const auto catalog = gen::builtin_catalog({"filesystem", "notion", "monday"});
    for (std::size_t i = 0; i < 300; ++i) {
        auto t = gen::random_trajectory(rng, catalog, i);
        auto x = extract_instances(t, catalog, prompts::kDefaultSystemPrompt);
        auto problems = gen::mask_problems(t, x);
        CAPTURE(t.id);
        CHECK(problems.empty());
        // a turn's layout slices back to exactly the name and the arguments
        for (const auto& s : t.steps) {
            auto turn = prompts::tool_call_turn(s.tool, s.arguments);
            auto layout = prompts::tool_call_layout(s.tool, s.arguments);
            CHECK(turn.substr(layout.name.first, layout.name.second - layout.name.first) == s.tool);
            CHECK(json::parse(turn.substr(layout.arguments.first, layout.arguments.second - layout.arguments.first)) ==
                  s.arguments);
            CHECK(layout.name.second <= layout.arguments.first);
            CHECK(json::parse(turn) == json{{"name", s.tool}, {"arguments", s.arguments}});
        }
    }
}

TEST_CASE("splits partition the input") {
    std::mt19937_64 rng(kSeed + 5);
    for (int i = 0; i < 300; ++i) {
        const auto n = 2 + gen::pick(rng, 500);
        const double ratio = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
        const auto seed = rng();
        auto s = split_trajectories(n, ratio, seed);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.validation.begin(), s.validation.end());
        CHECK(all.size() == n);
        CHECK(s.train.size() + s.validation.size() == n);
        CHECK(*all.rbegin() == n - 1);
        const double expect = std::round(ratio * static_cast<double>(n));
        CHECK(std::abs(static_cast<double>(s.train.size()) - expect) <= 1.0);
        CHECK(s.train.size() >= 1);
        CHECK(s.validation.size() >= 1);
        CHECK(split_trajectories(n, ratio, seed).train == s.train);
    }
}

TEST_CASE("test reservation stays balanced") {
    std::mt19937_64 rng(kSeed + 6);
    for (int i = 0; i < 200; ++i) {
        const auto tools = 1 + gen::pick(rng, 20);
        const auto per_tool = 1 + gen::pick(rng, 10);
        const auto total = gen::pick(rng, tools * per_tool + 1);
        std::map<std::string, std::vector<SyntheticQuery>> groups;
        for (std::size_t t = 0; t < tools; ++t) {
            for (std::size_t k = 0; k < per_tool; ++k) {
                auto name = "tool" + std::to_string(t);
                groups[name].push_back({name + "." + std::to_string(k), "fs", name, "q"});
            }
        }
        auto picked = reserve_test_set(groups, total, rng());
        CHECK(picked.size() == total);
        std::map<std::string, std::size_t> counts;
        for (const auto& g : groups) counts[g.first] = 0;
        for (const auto& q : picked) ++counts[q.tool];
        auto [lo, hi] = std::minmax_element(counts.begin(), counts.end(),
                                            [](auto& a, auto& b) { return a.second < b.second; });
        CHECK(hi->second - lo->second <= 1);
        std::set<std::string> ids;
        for (const auto& q : picked) ids.insert(q.id);
        CHECK(ids.size() == picked.size());
    }
}

TEST_CASE("score is monotone and bounded") {
    int last = 0;
    for (int i = 0; i <= 10000; ++i) {
        const double p = i / 100.0;
        const int s = score(p);
        CHECK(s >= last);
        CHECK(s >= 0);
        CHECK(s <= 10);
        CHECK(std::abs(s * 10 - p) <= 5.0 + 1e-9);
        last = s;
    }
    for (std::size_t t = 1; t <= 60; ++t) {
        int prev = 0;
        for (std::size_t sat = 0; sat <= t; ++sat) {
            const int s = score_from_counts(sat, t);
            CHECK(s >= prev);
            CHECK(s == score(100.0 * static_cast<double>(sat) / static_cast<double>(t)));
            prev = s;
        }
        CHECK(score_from_counts(t, t) == 10);
        CHECK(score_from_counts(0, t) == 0);
    }
}

TEST_CASE("oracle ignores step order and irrelevant steps") {
    std::mt19937_64 rng(kSeed + 7);
    GroundTruth truth;
    truth.fs_status = {{"d", true, 0, "2024-01-01T00:00:00Z", "755", std::nullopt},
                       {"d/a.txt", false, 6, "2024-01-01T00:00:00Z", "644", "alpha\n"},
                       {"d/b.txt", false, 5, "2024-02-01T00:00:00Z", "600", "beta\n"}};
    truth.requirements = {{"ls", RequirementKind::listing, "d/b.txt", "", {}, {"list_directory"}},
                          {"a", RequirementKind::content, "d/a.txt", "", {}, {"read_file"}},
                          {"b", RequirementKind::content, "d/b.txt", "", {}, {"read_file"}},
                          {"perm", RequirementKind::metadata, "d/b.txt", "permissions", {}, {"get_file_info"}}};
    auto step = [](std::string tool, json args, std::string payload) {
        Step s;
        s.toolset_id = "filesystem";
        s.tool = std::move(tool);
        s.arguments = std::move(args);
        s.result = {ToolStatus::ok, std::move(payload), false, {}};
        return s;
    };
    const std::vector<Step> useful{step("list_directory", {{"path", "d"}}, "[FILE] a.txt\n[FILE] b.txt\n"),
                                   step("read_file", {{"path", "d/a.txt"}}, "alpha\n"),
                                   step("read_file", {{"path", "d/b.txt"}}, "beta\n"),
                                   step("get_file_info", {{"path", "d/b.txt"}}, "permissions: 600\n")};
    const auto catalog = gen::builtin_catalog({"filesystem"});
    for (int i = 0; i < 300; ++i) {
        Trajectory t;
        // a random subset of the useful steps, plus noise
        std::vector<std::string> expected_missing;
        for (std::size_t k = 0; k < useful.size(); ++k) {
            if (gen::pick(rng, 4) == 0) {
                expected_missing.push_back(truth.requirements[k].id);
            } else {
                t.steps.push_back(useful[k]);
            }
        }
        auto noise = gen::random_trajectory(rng, catalog, i);
        for (auto& s : noise.steps) {
            s.arguments = {{"path", "elsewhere/" + s.tool}};
            t.steps.push_back(s);
        }
        const auto baseline = check_coverage(truth, t);
        CHECK(baseline.unsatisfied == expected_missing);
        CHECK(baseline.score == score_from_counts(useful.size() - expected_missing.size(), useful.size()));
        std::shuffle(t.steps.begin(), t.steps.end(), rng);
        CHECK(check_coverage(truth, t) == baseline);
    }
}

TEST_CASE("capped payloads never exceed the limit") {
    std::mt19937_64 rng(kSeed + 8);
    for (int i = 0; i < 3000; ++i) {
        const auto cap = gen::pick(rng, 300);
        std::string payload;
        for (std::size_t n = gen::pick(rng, 80); n > 0; --n) payload += gen::random_text(rng);
        auto r = cap_output({ToolStatus::ok, payload, false, {}}, cap);
        CHECK(r.payload.size() <= cap);
        CHECK(r.truncated == (payload.size() > cap));
        CHECK_NOTHROW(json(r.payload).dump());  // still valid UTF-8
        if (!r.truncated) {
            CHECK(r.payload == payload);
        } else if (cap >= kTruncationMarker.size()) {
            CHECK(r.payload.size() <= cap);
            CHECK(r.payload.ends_with(kTruncationMarker));
            CHECK(payload.starts_with(r.payload.substr(0, r.payload.size() - kTruncationMarker.size())));
        }
    }
    ToolHub hub;
    ToolsetConfig debug;
    debug.toolset_id = "debug";
    hub.register_toolset(debug);
    for (int i = 0; i < 20; ++i) {
        SandboxPolicy p;
        p.max_output_bytes = 16 + gen::pick(rng, 4000);
        auto r = hub.invoke("debug", "emit", {{"bytes", gen::pick(rng, 10000)}}, p);
        CHECK(r.payload.size() <= p.max_output_bytes);
    }
}
