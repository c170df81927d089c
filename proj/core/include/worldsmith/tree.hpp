#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/canonical.hpp"
#include "worldsmith/inputs.hpp"

namespace worldsmith {

struct TreeNode {
    std::string node_id;
    std::optional<std::string> parent_id;  // empty for the root
    CanonicalSnapshot snapshot;
    std::vector<ImageRef> results;
    std::vector<std::uint64_t> seeds;  // one per generation batch appended here
    std::vector<std::string> children;
    std::int64_t created_at = 0;  // ms since epoch
    std::string label;            // scene + region descriptions

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

enum class ManualMode { copy, blank };

/// Preview text for a node: the scene description followed by each region
/// description, separated by " | ".
std::string node_label(const GenerationInputs& inputs);

std::int64_t now_ms();

/// Append-only branching history of one tile.
///
/// The root holds empty inputs and never receives results. A generation whose
/// canonical inputs differ from the selected node (or that happens while the
/// root is selected) adds a child of the selected node and selects it;
/// otherwise the results append to the selected node.
class TileTree {
public:
    TileTree();
    explicit TileTree(std::int64_t created_at);

    /// Returns the node the results were recorded on.
    std::string record_generation(const GenerationInputs& inputs, std::vector<ImageRef> results,
                                  std::optional<std::uint64_t> seed = std::nullopt,
                                  std::int64_t now = now_ms());
    std::string record_generation(const CanonicalSnapshot& snapshot, std::string label,
                                  std::vector<ImageRef> results,
                                  std::optional<std::uint64_t> seed = std::nullopt,
                                  std::int64_t now = now_ms());

    std::string add_node_manual(const std::string& at_node, ManualMode mode, std::int64_t now = now_ms());

    /// Selects the node and returns a fresh copy of its inputs.
    GenerationInputs select_node(const std::string& node_id, const SketchResolver& sketches = {});

    const TreeNode& node(const std::string& node_id) const;
    bool contains(const std::string& node_id) const noexcept { return index_.count(node_id) != 0; }
    const std::string& root_id() const noexcept { return nodes_.front().node_id; }
    const std::string& selected_id() const noexcept { return selected_; }
    const TreeNode& selected() const { return node(selected_); }
    std::size_t size() const noexcept { return nodes_.size(); }
    /// Nodes in creation order; the root comes first.
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

    // Layout hints for tree renderers.
    int depth(const std::string& node_id) const;
    int sibling_index(const std::string& node_id) const;

    /// Throws validation if parent/child links, reachability or selection are
    /// inconsistent.
    void check_invariants() const;

    nlohmann::json to_json() const;
    static TileTree from_json(const nlohmann::json& doc);

    friend bool operator==(const TileTree& a, const TileTree& b) {
        return a.nodes_ == b.nodes_ && a.selected_ == b.selected_;
    }

private:
    TreeNode& mutable_node(const std::string& node_id);
    std::string add_child(const std::string& parent, CanonicalSnapshot snapshot, std::string label,
                          std::int64_t now);

    std::vector<TreeNode> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string selected_;
    std::uint64_t next_id_ = 0;
};

inline constexpr int tree_format_version = 1;

/// Same shape, snapshots, results and selection, ignoring node ids and
/// timestamps. Children are compared in insertion order.
bool isomorphic(const TileTree& a, const TileTree& b);

}  // namespace worldsmith
