#include <gtest/gtest.h>

#include "tree_reference.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/tree.hpp"

using namespace worldsmith;

namespace {

GenerationInputs scene(std::string text) {
    GenerationInputs in;
    in.scene_prompt = std::move(text);
    return in;
}

std::vector<ImageRef> results(std::string tag, int n = 1) {
    std::vector<ImageRef> out;
    for (int i = 0; i < n; ++i) out.push_back({tag + std::to_string(i), 4, 4});
    return out;
}

SketchResolver resolver_of(const std::map<std::string, SketchLayer>& m) {
    return [&m](const std::string& id) -> std::optional<SketchLayer> {
        auto it = m.find(id);
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
}

}  // namespace

TEST(Tree, FreshTreeHasEmptyRoot) {
    TileTree t(5);
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(t.root_id(), "n0");
    EXPECT_EQ(t.selected_id(), "n0");
    EXPECT_EQ(t.selected().snapshot, empty_snapshot());
    EXPECT_TRUE(t.selected().results.empty());
    EXPECT_EQ(t.selected().created_at, 5);
}

TEST(Tree, GenerationFromRootAlwaysBranches) {
    TileTree t(0);
    const auto a = t.record_generation({}, results("a"), 1, 10);
    EXPECT_EQ(a, "n1");
    EXPECT_TRUE(t.node("n0").results.empty()) << "root never holds results";
    EXPECT_EQ(t.node(a).parent_id, std::optional<std::string>("n0"));
    EXPECT_EQ(t.selected_id(), a);
}

TEST(Tree, UnchangedInputsAppend) {
    TileTree t(0);
    const auto a = t.record_generation(scene("castle"), results("a", 2), 1);
    const auto b = t.record_generation(scene("castle"), results("b", 3), 2);
    EXPECT_EQ(a, b);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.node(a).results.size(), 5u);
    EXPECT_EQ(t.node(a).seeds, (std::vector<std::uint64_t>{1, 2}));
    EXPECT_EQ(t.node(a).label, "castle");
}

TEST(Tree, ChangedInputsBranchFromSelection) {
    TileTree t(0);
    const auto a = t.record_generation(scene("castle"), results("a"));
    const auto b = t.record_generation(scene("castle at night"), results("b"));
    EXPECT_EQ(t.node(b).parent_id, a);
    t.select_node(a);
    const auto c = t.record_generation(scene("castle at night"), results("c"));
    EXPECT_NE(c, b) << "siblings with equal inputs are not merged";
    EXPECT_EQ(t.node(a).children, (std::vector<std::string>{b, c}));
    EXPECT_EQ(t.sibling_index(c), 1);
    EXPECT_EQ(t.depth(c), 2);
    EXPECT_EQ(t.depth(t.root_id()), 0);
    EXPECT_NO_THROW(t.check_invariants());
}

TEST(Tree, ManualNodes) {
    TileTree t(0);
    GenerationInputs in = scene("desert");
    in.seed = 4;
    const auto a = t.record_generation(in, results("a"));
    const auto copy = t.add_node_manual(a, ManualMode::copy);
    EXPECT_EQ(t.selected_id(), copy);
    EXPECT_EQ(t.node(copy).snapshot, t.node(a).snapshot);
    EXPECT_TRUE(t.node(copy).results.empty());
    EXPECT_EQ(t.select_node(copy), in);

    const auto blank = t.add_node_manual(t.root_id(), ManualMode::blank);
    EXPECT_EQ(t.node(blank).snapshot, empty_snapshot());
    EXPECT_EQ(t.node(blank).parent_id, std::optional<std::string>("n0"));

    // A generation on the copied node with unchanged inputs lands on it.
    t.select_node(copy);
    EXPECT_EQ(t.record_generation(in, results("c")), copy);
}

TEST(Tree, Errors) {
    TileTree t(0);
    EXPECT_THROW(t.record_generation({}, {}), Error);
    try {
        t.select_node("n42");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_found);
    }
    EXPECT_THROW(t.add_node_manual("n9", ManualMode::copy), Error);
}

TEST(Tree, NodeLabel) {
    GenerationInputs in = scene("valley");
    in.add_region({"", {}, "river", {{BrushKind::pencil, {{0, 0}}, 1}}});
    in.add_region({"", {}, "", {{BrushKind::pencil, {{0, 0}}, 1}}});
    in.add_region({"", {}, "old mill", {{BrushKind::pencil, {{0, 0}}, 1}}});
    EXPECT_EQ(node_label(in), "valley | river | old mill");
    EXPECT_EQ(node_label(GenerationInputs{}), "");
}

TEST(Tree, JsonRoundTripAndTamperDetection) {
    TileTree t(1);
    t.record_generation(scene("a"), results("a"), 3, 2);
    t.record_generation(scene("b"), results("b"), 4, 3);
    t.add_node_manual("n1", ManualMode::copy, 4);
    t.select_node("n2");
    const auto doc = nlohmann::json::parse(t.to_json().dump());
    auto back = TileTree::from_json(doc);
    EXPECT_TRUE(back == t);
    EXPECT_EQ(back.record_generation(scene("c"), results("c")), "n4") << "ids continue after reload";

    auto bad = doc;
    bad["nodes"][1]["digest"] = std::string(64, '0');
    EXPECT_THROW(TileTree::from_json(bad), Error);
    bad = doc;
    bad["selected_id"] = "n99";
    EXPECT_THROW(TileTree::from_json(bad), Error);
    bad = doc;
    bad["nodes"][0]["children"] = nlohmann::json::array();
    EXPECT_THROW(TileTree::from_json(bad), Error);
    bad = doc;
    bad["nodes"][2]["node_id"] = "n1";
    EXPECT_THROW(TileTree::from_json(bad), Error);
    bad = doc;
    bad["format_version"] = 2;
    EXPECT_THROW(TileTree::from_json(bad), Error);
}

TEST(Tree, IsomorphismIgnoresIdsAndTimes) {
    TileTree a(0), b(100);
    a.record_generation(scene("x"), results("r"), 1, 5);
    b.record_generation(scene("x"), results("r"), 9, 500);
    EXPECT_TRUE(isomorphic(a, b));
    b.record_generation(scene("y"), results("s"));
    EXPECT_FALSE(isomorphic(a, b));
}

TEST(Tree, DistinctGenerationsAddOneNodeEach) {
    for (int n : {1, 5, 40}) {
        TileTree t(0);
        for (int i = 0; i < n; ++i) t.record_generation(scene("prompt " + std::to_string(i)), results("g"));
        EXPECT_EQ(t.size() - 1, static_cast<std::size_t>(n));
    }
}

TEST(Tree, MatchesReferenceOnRandomScripts) {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        auto outcome = oracle::run_script(oracle::random_script(seed, 120));
        EXPECT_EQ(oracle::compare_trees(outcome.impl, outcome.ref, resolver_of(outcome.sketches)), "")
            << "seed " << seed;
        EXPECT_EQ(outcome.unchanged_regenerations_grew, 0u);
        EXPECT_NO_THROW(outcome.impl.check_invariants());
        const auto reloaded = TileTree::from_json(outcome.impl.to_json());
        EXPECT_TRUE(reloaded == outcome.impl);
    }
}
