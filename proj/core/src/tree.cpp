#include "worldsmith/tree.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <utility>

#include "worldsmith/error.hpp"

namespace worldsmith {

std::string node_label(const GenerationInputs& inputs) {
    std::string label = inputs.scene_prompt;
    for (const auto& r : inputs.regions) {
        if (r.description.empty()) continue;
        if (!label.empty()) label += " | ";
        label += r.description;
    }
    return label;
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

TileTree::TileTree() : TileTree(now_ms()) {}

TileTree::TileTree(std::int64_t created_at) {
    TreeNode root;
    root.node_id = "n0";
    root.snapshot = empty_snapshot();
    root.created_at = created_at;
    nodes_.push_back(std::move(root));
    index_.emplace("n0", 0);
    selected_ = "n0";
    next_id_ = 1;
}

const TreeNode& TileTree::node(const std::string& node_id) const {
    auto it = index_.find(node_id);
    if (it == index_.end()) fail(ErrorCode::not_found, "unknown tree node '" + node_id + "'");
    return nodes_[it->second];
}

TreeNode& TileTree::mutable_node(const std::string& node_id) {
    return const_cast<TreeNode&>(std::as_const(*this).node(node_id));
}

std::string TileTree::add_child(const std::string& parent, CanonicalSnapshot snapshot, std::string label,
                                std::int64_t now) {
    TreeNode n;
    n.node_id = "n" + std::to_string(next_id_++);
    n.parent_id = parent;
    n.snapshot = std::move(snapshot);
    n.label = std::move(label);
    n.created_at = now;
    const std::string id = n.node_id;
    mutable_node(parent).children.push_back(id);
    index_.emplace(id, nodes_.size());
    nodes_.push_back(std::move(n));
    return id;
}

std::string TileTree::record_generation(const GenerationInputs& inputs, std::vector<ImageRef> results,
                                        std::optional<std::uint64_t> seed, std::int64_t now) {
    return record_generation(canonicalize_inputs(inputs), node_label(inputs), std::move(results), seed, now);
}

std::string TileTree::record_generation(const CanonicalSnapshot& snapshot, std::string label,
                                        std::vector<ImageRef> results, std::optional<std::uint64_t> seed,
                                        std::int64_t now) {
    if (results.empty()) fail(ErrorCode::invalid_argument, "a generation must produce at least one result");
    std::string target = selected_;
    if (target == root_id() || node(target).snapshot.digest != snapshot.digest) {
        target = add_child(selected_, snapshot, std::move(label), now);
        selected_ = target;
    }
    auto& n = mutable_node(target);
    n.results.insert(n.results.end(), std::make_move_iterator(results.begin()),
                     std::make_move_iterator(results.end()));
    if (seed) n.seeds.push_back(*seed);
    return target;
}

std::string TileTree::add_node_manual(const std::string& at_node, ManualMode mode, std::int64_t now) {
    const auto& at = node(at_node);
    CanonicalSnapshot snap = mode == ManualMode::copy ? at.snapshot : empty_snapshot();
    std::string label = mode == ManualMode::copy ? at.label : std::string{};
    auto id = add_child(at_node, std::move(snap), std::move(label), now);
    selected_ = id;
    return id;
}

GenerationInputs TileTree::select_node(const std::string& node_id, const SketchResolver& sketches) {
    const auto& n = node(node_id);
    auto inputs = decode_snapshot(n.snapshot, sketches);
    selected_ = node_id;
    return inputs;
}

int TileTree::depth(const std::string& node_id) const {
    int d = 0;
    for (const TreeNode* n = &node(node_id); n->parent_id; n = &node(*n->parent_id)) ++d;
    return d;
}

int TileTree::sibling_index(const std::string& node_id) const {
    const auto& n = node(node_id);
    if (!n.parent_id) return 0;
    const auto& siblings = node(*n.parent_id).children;
    for (std::size_t i = 0; i < siblings.size(); ++i) {
        if (siblings[i] == node_id) return static_cast<int>(i);
    }
    fail(ErrorCode::validation, "node '" + node_id + "' missing from its parent's children");
}

void TileTree::check_invariants() const {
    if (nodes_.empty()) fail(ErrorCode::validation, "tree has no root");
    if (nodes_.front().parent_id) fail(ErrorCode::validation, "root has a parent");
    if (index_.size() != nodes_.size()) fail(ErrorCode::validation, "duplicate node ids");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (!n.parent_id) fail(ErrorCode::validation, "more than one root ('" + n.node_id + "')");
        if (!contains(*n.parent_id)) {
            fail(ErrorCode::validation, "node '" + n.node_id + "' has unknown parent '" + *n.parent_id + "'");
        }
        const auto& siblings = node(*n.parent_id).children;
        if (std::count(siblings.begin(), siblings.end(), n.node_id) != 1) {
            fail(ErrorCode::validation, "parent of '" + n.node_id + "' does not list it exactly once");
        }
    }
    for (const auto& n : nodes_) {
        for (const auto& c : n.children) {
            if (!contains(c) || node(c).parent_id != n.node_id) {
                fail(ErrorCode::validation, "child link '" + n.node_id + "' -> '" + c + "' is inconsistent");
            }
        }
    }
    // Reachability from the root; with consistent single-parent links this
    // also rules out cycles.
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{0};
    std::size_t visited = 0;
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        if (seen[i]) fail(ErrorCode::validation, "cycle through '" + nodes_[i].node_id + "'");
        seen[i] = 1;
        ++visited;
        for (const auto& c : nodes_[i].children) stack.push_back(index_.at(c));
    }
    if (visited != nodes_.size()) fail(ErrorCode::validation, "tree contains unreachable nodes");
    if (!contains(selected_)) fail(ErrorCode::validation, "selected node '" + selected_ + "' does not exist");
}

nlohmann::json TileTree::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
        nlohmann::json results = nlohmann::json::array();
        for (const auto& r : n.results) results.push_back(image_ref_to_json(r));
        nodes.push_back({
            {"node_id", n.node_id},
            {"parent_id", n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json(nullptr)},
            {"snapshot", base64_encode(n.snapshot.bytes)},
            {"digest", n.snapshot.digest},
            {"results", std::move(results)},
            {"seeds", n.seeds},
            {"children", n.children},
            {"created_at", n.created_at},
            {"label", n.label},
        });
    }
    return {{"format_version", tree_format_version},
            {"root_id", root_id()},
            {"selected_id", selected_},
            {"next_id", next_id_},
            {"nodes", std::move(nodes)}};
}

TileTree TileTree::from_json(const nlohmann::json& doc) {
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != tree_format_version) {
            fail(ErrorCode::validation, "unsupported tree format_version " + std::to_string(version));
        }
        TileTree t(0);
        t.nodes_.clear();
        t.index_.clear();
        for (const auto& j : doc.at("nodes")) {
            TreeNode n;
            n.node_id = j.at("node_id").get<std::string>();
            if (!j.at("parent_id").is_null()) n.parent_id = j.at("parent_id").get<std::string>();
            n.snapshot = snapshot_from_bytes(base64_decode(j.at("snapshot").get<std::string>()));
            if (n.snapshot.digest != j.at("digest").get<std::string>()) {
                fail(ErrorCode::validation, "snapshot digest mismatch on node '" + n.node_id + "'");
            }
            for (const auto& r : j.at("results")) n.results.push_back(image_ref_from_json(r));
            n.seeds = j.value("seeds", std::vector<std::uint64_t>{});
            n.children = j.at("children").get<std::vector<std::string>>();
            n.created_at = j.value("created_at", std::int64_t{0});
            n.label = j.value("label", std::string{});
            if (!t.index_.emplace(n.node_id, t.nodes_.size()).second) {
                fail(ErrorCode::validation, "duplicate node id '" + n.node_id + "'");
            }
            t.nodes_.push_back(std::move(n));
        }
        if (t.nodes_.empty()) fail(ErrorCode::validation, "tree document has no nodes");
        const auto root = doc.at("root_id").get<std::string>();
        if (t.nodes_.front().node_id != root) fail(ErrorCode::validation, "root must be the first node");
        t.selected_ = doc.at("selected_id").get<std::string>();
        t.next_id_ = doc.value("next_id", static_cast<std::uint64_t>(t.nodes_.size()));
        t.check_invariants();
        return t;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::validation, std::string("malformed tree document: ") + e.what());
    }
}

bool isomorphic(const TileTree& a, const TileTree& b) {
    if (a.size() != b.size()) return false;
    std::function<bool(const std::string&, const std::string&)> same = [&](const std::string& x,
                                                                          const std::string& y) {
        const auto& na = a.node(x);
        const auto& nb = b.node(y);
        if (na.snapshot.digest != nb.snapshot.digest || na.results != nb.results ||
            na.children.size() != nb.children.size()) {
            return false;
        }
        if ((x == a.selected_id()) != (y == b.selected_id())) return false;
        for (std::size_t i = 0; i < na.children.size(); ++i) {
            if (!same(na.children[i], nb.children[i])) return false;
        }
        return true;
    };
    return same(a.root_id(), b.root_id());
}

}  // namespace worldsmith
