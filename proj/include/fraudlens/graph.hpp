#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlens/ingest.hpp"

namespace fraudlens {

enum class NodeRole : std::uint8_t { Card, Merchant };

std::string_view to_string(NodeRole role);

struct GraphEdge {
  std::uint32_t card = 0;
  std::uint32_t merchant = 0;
  std::uint64_t txn_count = 0;
  std::uint64_t fraud_count = 0;

  bool operator==(const GraphEdge&) const = default;
};

struct NodeStats {
  std::uint64_t n_txns = 0;
  std::uint64_t n_counterparties = 0;
  std::uint64_t n_fraud_txns = 0;

  bool operator==(const NodeStats&) const = default;
};

/// Card-merchant graph with one edge per (card, merchant) pair. Nodes have a
/// unified id: cards occupy [0, n_cards), merchants [n_cards, n_nodes).
/// Immutable once built.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  /// Throws Error{InvalidParams} on out-of-range endpoints, duplicate pairs,
  /// zero txn counts, or fraud_count > txn_count.
  BipartiteGraph(std::vector<std::string> card_tokens,
                 std::vector<std::string> merchant_tokens,
                 std::vector<GraphEdge> edges);

  std::size_t n_cards() const noexcept { return card_tokens_.size(); }
  std::size_t n_merchants() const noexcept { return merchant_tokens_.size(); }
  std::size_t n_nodes() const noexcept { return n_cards() + n_merchants(); }
  std::size_t n_edges() const noexcept { return edges_.size(); }

  std::uint32_t card_node(std::uint32_t card) const { return card; }
  std::uint32_t merchant_node(std::uint32_t merchant) const {
    return static_cast<std::uint32_t>(n_cards()) + merchant;
  }
  NodeRole role(std::uint32_t node) const {
    return node < n_cards() ? NodeRole::Card : NodeRole::Merchant;
  }
  const std::string& token(std::uint32_t node) const;

  std::span<const std::uint32_t> neighbors(std::uint32_t node) const;
  std::span<const std::uint32_t> incident_edges(std::uint32_t node) const;
  const NodeStats& stats(std::uint32_t node) const { return stats_[node]; }

  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  const std::vector<std::string>& card_tokens() const noexcept { return card_tokens_; }
  const std::vector<std::string>& merchant_tokens() const noexcept {
    return merchant_tokens_;
  }

  std::optional<std::uint32_t> find_card(std::string_view token) const;

 private:
  std::vector<std::string> card_tokens_;
  std::vector<std::string> merchant_tokens_;
  std::vector<GraphEdge> edges_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<std::uint32_t> adj_nodes_;
  std::vector<std::uint32_t> adj_edges_;
  std::vector<NodeStats> stats_;
  std::unordered_map<std::string, std::uint32_t> card_lookup_;
};

BipartiteGraph build_graph(const Dataset& d);

/// Subgraph induced on the target card, its merchants, and those merchants'
/// cards. Throws Error{UnknownCard}.
BipartiteGraph two_step_egonet(const BipartiteGraph& g, std::string_view target_card);

/// Core number per unified node id, from bin-sort degeneracy peeling over
/// distinct-neighbor degrees.
std::vector<std::uint32_t> core_decomposition(const BipartiteGraph& g);

struct MainCore {
  std::uint32_t k = 0;
  std::vector<std::uint32_t> members;  // unified node ids, ascending
};

/// Largest non-empty k-core. Throws Error{EmptyGraph}.
MainCore main_core(const BipartiteGraph& g);
MainCore main_core(std::span<const std::uint32_t> core_numbers);

struct EgonetNode {
  NodeRole role = NodeRole::Card;
  std::string id;
  // Whole-dataset aggregates, for annotation.
  std::uint64_t n_txns = 0;
  std::uint64_t n_counterparties = 0;
  std::uint64_t n_fraud_txns = 0;
  std::uint32_t core_number = 0;  // within the egonet
  bool in_main_core = false;
  bool is_target = false;
};

struct EgonetEdge {
  std::string card;
  std::string merchant;
  std::uint64_t txn_count = 0;
  std::uint64_t fraud_count = 0;
  double display_width = 0.0;  // log10(1 + txn_count)
};

/// Main core of the target's two-step egonet, plus the target itself when it
/// falls outside the core.
struct EgonetView {
  std::string target_card;
  std::uint32_t core_k = 0;
  std::vector<EgonetNode> nodes;
  std::vector<EgonetEdge> edges;  // induced on `nodes`
  std::size_t egonet_nodes = 0;
  std::size_t egonet_edges = 0;
};

EgonetView egonet_view(const BipartiteGraph& g, std::string_view target_card);

inline double display_width(std::uint64_t txn_count) {
  return std::log10(1.0 + static_cast<double>(txn_count));
}

}  // namespace fraudlens
