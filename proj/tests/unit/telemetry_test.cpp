#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "fuzz.hpp"
#include "oracles.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/telemetry.hpp"

using namespace worldsmith;
namespace fs = std::filesystem;

namespace {

InteractionEvent make_event(std::string session, EventKind kind, std::int64_t ts, nlohmann::json payload = {}) {
    InteractionEvent e;
    e.session_id = std::move(session);
    e.kind = kind;
    e.timestamp_ms = ts;
    e.tile_id = "t0";
    e.payload = payload.is_null() ? nlohmann::json::object() : std::move(payload);
    return e;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

}  // namespace

TEST(EventKinds, Names) {
    for (auto k : all_event_kinds) EXPECT_EQ(event_kind_from_string(to_string(k)), k);
    EXPECT_EQ(to_string(EventKind::run_diffusion), "run_diffusion");
    EXPECT_FALSE(event_kind_from_string("scroll").has_value());
}

TEST(EventJson, RoundTripAndErrors) {
    auto e = make_event("s1", EventKind::tree_select, 12, {{"node_id", "n3"}});
    e.event_id = 7;
    EXPECT_EQ(event_from_json(event_to_json(e)), e);
    e.tile_id.reset();
    EXPECT_EQ(event_from_json(event_to_json(e)), e);
    EXPECT_EQ(event_to_json(e)["timestamp"], 12);

    EXPECT_THROW(event_from_json(nlohmann::json::parse(R"({"session_id":"s","kind":"nope"})")), Error);
    EXPECT_THROW(event_from_json(nlohmann::json::parse(R"({"kind":"blend"})")), Error);
    EXPECT_THROW(parse_ndjson("{\"session_id\":\"s\",\"kind\":\"blend\"}\n{oops\n"), Error);
    EXPECT_EQ(parse_ndjson("\n  \n").size(), 0u);
}

TEST(EventJson, FuzzedRoundTrip) {
    std::mt19937_64 rng(10000);
    std::string ndjson;
    std::vector<InteractionEvent> expected;
    for (int i = 0; i < 10000; ++i) {
        InteractionEvent e;
        e.event_id = rng();
        e.timestamp_ms = static_cast<std::int64_t>(rng() >> 1);
        e.session_id = "s" + std::to_string(rng() % 100);
        if (rng() % 2) e.tile_id = fuzz::random_text(rng, 6);
        e.kind = all_event_kinds[rng() % 8];
        e.payload = {{"text", fuzz::random_text(rng)}, {"n", static_cast<std::int64_t>(rng())}, {"f", 0.5}};
        ndjson += event_to_json(e).dump() + "\n";
        expected.push_back(e);
    }
    EXPECT_EQ(parse_ndjson(ndjson), expected);
}

TEST(EventStore, AssignsIdsAndClampsTimestamps) {
    oracle::TempDir dir;
    EventStore store(dir.path(), {false});
    EXPECT_EQ(store.append(make_event("a", EventKind::modify_text, 100)).event_id, 1u);
    const auto second = store.append(make_event("a", EventKind::modify_text, 50));
    EXPECT_EQ(second.event_id, 2u);
    EXPECT_EQ(second.timestamp_ms, 100) << "time never goes backwards within a session";
    EXPECT_EQ(store.append(make_event("b", EventKind::blend, 1)).event_id, 1u) << "ids are per session";

    const auto a = store.scan("a");
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[1], second);
    EXPECT_EQ(store.sessions(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(parse_ndjson(store.export_ndjson("a")), a);

    const auto idx = read_file(dir.path() / "a" / "events.idx");
    EXPECT_EQ(std::stoull(idx.substr(0, 20)), 2u);
    EXPECT_EQ(std::stoull(idx.substr(21, 20)), read_file(dir.path() / "a" / "events.ndjson").size());

    try {
        store.append(make_event("../x", EventKind::blend, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(EventStore, SurvivesReopen) {
    oracle::TempDir dir;
    {
        EventStore store(dir.path());
        for (int i = 0; i < 5; ++i) store.append(make_event("s", EventKind::modify_region, 10 + i));
    }
    EventStore store(dir.path());
    EXPECT_EQ(store.scan("s").size(), 5u);
    const auto e = store.append(make_event("s", EventKind::blend, 0));
    EXPECT_EQ(e.event_id, 6u);
    EXPECT_EQ(e.timestamp_ms, 14);
}

TEST(EventStore, RecoversFromTornTails) {
    oracle::TempDir dir;
    std::string full;
    std::vector<std::size_t> line_ends;
    {
        EventStore store(dir.path(), {false});
        for (int i = 0; i < 40; ++i) store.append(make_event("s", EventKind::modify_text, i, {{"text", std::string(i, 'x')}}));
        full = read_file(dir.path() / "s" / "events.ndjson");
    }
    for (std::size_t p = 0; p < full.size(); ++p)
        if (full[p] == '\n') line_ends.push_back(p + 1);

    std::mt19937 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t cut = rng() % (full.size() + 1);
        write_file(dir.path() / "s" / "events.ndjson", full.substr(0, cut));
        const auto complete = static_cast<std::size_t>(
            std::upper_bound(line_ends.begin(), line_ends.end(), cut) - line_ends.begin());
        EventStore store(dir.path(), {false});
        ASSERT_EQ(store.scan("s").size(), complete) << "cut at " << cut;
        const auto next = store.append(make_event("s", EventKind::blend, 0));
        ASSERT_EQ(next.event_id, complete + 1);
        ASSERT_EQ(store.scan("s").size(), complete + 1);
        ASSERT_NO_THROW(parse_ndjson(read_file(dir.path() / "s" / "events.ndjson")));
    }
}

TEST(EventStore, DropsEverythingAfterACorruptLine) {
    oracle::TempDir dir;
    {
        EventStore store(dir.path(), {false});
        for (int i = 0; i < 3; ++i) store.append(make_event("s", EventKind::modify_text, i));
    }
    auto content = read_file(dir.path() / "s" / "events.ndjson");
    const auto second = content.find('\n') + 1;
    content[second] = '#';
    write_file(dir.path() / "s" / "events.ndjson", content);
    EventStore store(dir.path(), {false});
    EXPECT_EQ(store.scan("s").size(), 1u);
}

TEST(EventStore, ConcurrentAppendsGetDistinctIds) {
    oracle::TempDir dir;
    EventStore store(dir.path(), {false});
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&store, t] {
            for (int i = 0; i < 250; ++i) store.append(make_event(t % 2 ? "odd" : "even", EventKind::modify_tile, i));
        });
    }
    for (auto& t : threads) t.join();
    for (const char* s : {"odd", "even"}) {
        const auto events = store.scan(s);
        ASSERT_EQ(events.size(), 500u);
        for (std::size_t i = 0; i < events.size(); ++i) {
            EXPECT_EQ(events[i].event_id, i + 1);
            if (i) EXPECT_GE(events[i].timestamp_ms, events[i - 1].timestamp_ms);
        }
    }
}
