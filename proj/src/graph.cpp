#include "fraudlens/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "fraudlens/error.hpp"

namespace fraudlens {

std::string_view to_string(NodeRole role) {
  return role == NodeRole::Card ? "card" : "merchant";
}

BipartiteGraph::BipartiteGraph(std::vector<std::string> card_tokens,
                               std::vector<std::string> merchant_tokens,
                               std::vector<GraphEdge> edges)
    : card_tokens_(std::move(card_tokens)),
      merchant_tokens_(std::move(merchant_tokens)),
      edges_(std::move(edges)) {
  const std::size_t n = n_nodes();
  card_lookup_.reserve(card_tokens_.size());
  for (std::uint32_t c = 0; c < card_tokens_.size(); ++c) {
    if (!card_lookup_.emplace(card_tokens_[c], c).second) {
      throw Error(ErrorKind::InvalidParams, "duplicate card '" + card_tokens_[c] + "'");
    }
  }
  stats_.assign(n, {});
  adj_offsets_.assign(n + 1, 0);
  for (const GraphEdge& e : edges_) {
    if (e.card >= n_cards() || e.merchant >= n_merchants()) {
      throw Error(ErrorKind::InvalidParams, "edge endpoint out of range");
    }
    if (e.txn_count == 0 || e.fraud_count > e.txn_count) {
      throw Error(ErrorKind::InvalidParams,
                  "edge counts must satisfy 0 <= fraud_count <= txn_count, txn_count > 0");
    }
    ++adj_offsets_[card_node(e.card) + 1];
    ++adj_offsets_[merchant_node(e.merchant) + 1];
  }
  std::partial_sum(adj_offsets_.begin(), adj_offsets_.end(), adj_offsets_.begin());
  adj_nodes_.resize(adj_offsets_.back());
  adj_edges_.resize(adj_offsets_.back());
  std::vector<std::size_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const GraphEdge& e = edges_[i];
    const std::uint32_t c = card_node(e.card);
    const std::uint32_t m = merchant_node(e.merchant);
    adj_nodes_[cursor[c]] = m;
    adj_edges_[cursor[c]++] = i;
    adj_nodes_[cursor[m]] = c;
    adj_edges_[cursor[m]++] = i;
    for (const std::uint32_t v : {c, m}) {
      stats_[v].n_txns += e.txn_count;
      stats_[v].n_fraud_txns += e.fraud_count;
      ++stats_[v].n_counterparties;
    }
  }
  // Duplicate pairs would make degrees count multiplicity.
  for (std::uint32_t c = 0; c < n_cards(); ++c) {
    std::vector<std::uint32_t> nbrs(neighbors(c).begin(), neighbors(c).end());
    std::sort(nbrs.begin(), nbrs.end());
    if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end()) {
      throw Error(ErrorKind::InvalidParams,
                  "duplicate edge for card '" + card_tokens_[c] + "'");
    }
  }
}

const std::string& BipartiteGraph::token(std::uint32_t node) const {
  return node < n_cards() ? card_tokens_[node] : merchant_tokens_[node - n_cards()];
}

std::span<const std::uint32_t> BipartiteGraph::neighbors(std::uint32_t node) const {
  return std::span<const std::uint32_t>(adj_nodes_)
      .subspan(adj_offsets_[node], adj_offsets_[node + 1] - adj_offsets_[node]);
}

std::span<const std::uint32_t> BipartiteGraph::incident_edges(std::uint32_t node) const {
  return std::span<const std::uint32_t>(adj_edges_)
      .subspan(adj_offsets_[node], adj_offsets_[node + 1] - adj_offsets_[node]);
}

std::optional<std::uint32_t> BipartiteGraph::find_card(std::string_view token) const {
  const auto it = card_lookup_.find(std::string(token));
  if (it == card_lookup_.end()) return std::nullopt;
  return it->second;
}

BipartiteGraph build_graph(const Dataset& d) {
  std::vector<GraphEdge> edges;
  std::unordered_map<std::uint64_t, std::uint32_t> pair_index;
  pair_index.reserve(d.size());
  for (const TxnRecord& r : d.records()) {
    const std::uint64_t key = (std::uint64_t{r.card} << 32) | r.merchant;
    const auto [it, inserted] =
        pair_index.try_emplace(key, static_cast<std::uint32_t>(edges.size()));
    if (inserted) edges.push_back({r.card, r.merchant, 0, 0});
    GraphEdge& e = edges[it->second];
    ++e.txn_count;
    if (r.label == FraudLabel::Fraud) ++e.fraud_count;
  }
  return BipartiteGraph(d.card_tokens(), d.merchant_tokens(), std::move(edges));
}

namespace {

struct Egonet {
  BipartiteGraph graph;
  std::vector<std::uint32_t> to_parent;  // egonet node id -> parent node id
  std::uint32_t target = 0;              // egonet node id of the target
};

Egonet extract_egonet(const BipartiteGraph& g, std::string_view target_card) {
  const auto target = g.find_card(target_card);
  if (!target) {
    throw Error(ErrorKind::UnknownCard, "'" + std::string(target_card) + "'");
  }
  // Parent merchant/card id -> local index, in discovery order.
  std::unordered_map<std::uint32_t, std::uint32_t> local_card, local_merchant;
  std::vector<std::uint32_t> cards{*target}, merchants;
  local_card.emplace(*target, 0);
  for (const std::uint32_t m : g.neighbors(g.card_node(*target))) {
    local_merchant.emplace(m, static_cast<std::uint32_t>(merchants.size()));
    merchants.push_back(m);
  }
  std::vector<GraphEdge> edges;
  for (const std::uint32_t m : merchants) {
    for (const std::uint32_t ei : g.incident_edges(m)) {
      const GraphEdge& e = g.edges()[ei];
      auto [it, inserted] =
          local_card.try_emplace(e.card, static_cast<std::uint32_t>(cards.size()));
      if (inserted) cards.push_back(e.card);
      edges.push_back({it->second, local_merchant.at(m), e.txn_count, e.fraud_count});
    }
  }
  std::vector<std::string> card_tokens, merchant_tokens;
  std::vector<std::uint32_t> to_parent;
  for (const std::uint32_t c : cards) {
    card_tokens.push_back(g.token(c));
    to_parent.push_back(c);
  }
  for (const std::uint32_t m : merchants) {
    merchant_tokens.push_back(g.token(m));
    to_parent.push_back(m);
  }
  return {BipartiteGraph(std::move(card_tokens), std::move(merchant_tokens),
                         std::move(edges)),
          std::move(to_parent), 0};
}

}  // namespace

BipartiteGraph two_step_egonet(const BipartiteGraph& g, std::string_view target_card) {
  return extract_egonet(g, target_card).graph;
}

std::vector<std::uint32_t> core_decomposition(const BipartiteGraph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<std::uint32_t> degree(n), core(n, 0), pos(n), order(n);
  std::uint32_t max_degree = 0;
  for (std::uint32_t v = 0; v < n; ++v) {
    degree[v] = static_cast<std::uint32_t>(g.neighbors(v).size());
    max_degree = std::max(max_degree, degree[v]);
  }
  // bin_start[d] = first slot in `order` holding a node of current degree d.
  std::vector<std::uint32_t> bin_start(max_degree + 2, 0);
  for (std::uint32_t v = 0; v < n; ++v) ++bin_start[degree[v] + 1];
  std::partial_sum(bin_start.begin(), bin_start.end(), bin_start.begin());
  {
    std::vector<std::uint32_t> next(bin_start.begin(), bin_start.end() - 1);
    for (std::uint32_t v = 0; v < n; ++v) {
      pos[v] = next[degree[v]]++;
      order[pos[v]] = v;
    }
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t v = order[i];
    core[v] = degree[v];
    for (const std::uint32_t u : g.neighbors(v)) {
      if (degree[u] > degree[v]) {
        // Swap u with the first node of its bin, then shrink the bin.
        const std::uint32_t du = degree[u];
        const std::uint32_t first_pos = bin_start[du];
        const std::uint32_t w = order[first_pos];
        if (u != w) {
          std::swap(order[pos[u]], order[first_pos]);
          std::swap(pos[u], pos[w]);
        }
        ++bin_start[du];
        --degree[u];
      }
    }
  }
  return core;
}

MainCore main_core(std::span<const std::uint32_t> core_numbers) {
  if (core_numbers.empty()) throw Error(ErrorKind::EmptyGraph, "graph has no nodes");
  MainCore mc;
  mc.k = *std::max_element(core_numbers.begin(), core_numbers.end());
  for (std::uint32_t v = 0; v < core_numbers.size(); ++v) {
    if (core_numbers[v] == mc.k) mc.members.push_back(v);
  }
  return mc;
}

MainCore main_core(const BipartiteGraph& g) {
  return main_core(core_decomposition(g));
}

EgonetView egonet_view(const BipartiteGraph& g, std::string_view target_card) {
  const Egonet ego = extract_egonet(g, target_card);
  const BipartiteGraph& sub = ego.graph;
  const std::vector<std::uint32_t> cores = core_decomposition(sub);
  const MainCore mc = main_core(cores);

  EgonetView view;
  view.target_card = std::string(target_card);
  view.core_k = mc.k;
  view.egonet_nodes = sub.n_nodes();
  view.egonet_edges = sub.n_edges();

  std::vector<char> shown(sub.n_nodes(), 0);
  for (const std::uint32_t v : mc.members) shown[v] = 1;
  shown[ego.target] = 1;
  for (std::uint32_t v = 0; v < sub.n_nodes(); ++v) {
    if (!shown[v]) continue;
    const NodeStats& global = g.stats(ego.to_parent[v]);
    view.nodes.push_back({sub.role(v), sub.token(v), global.n_txns,
                          global.n_counterparties, global.n_fraud_txns, cores[v],
                          cores[v] == mc.k, v == ego.target});
  }
  for (const GraphEdge& e : sub.edges()) {
    const std::uint32_t c = sub.card_node(e.card);
    const std::uint32_t m = sub.merchant_node(e.merchant);
    if (shown[c] && shown[m]) {
      view.edges.push_back({sub.token(c), sub.token(m), e.txn_count, e.fraud_count,
                            display_width(e.txn_count)});
    }
  }
  return view;
}

}  // namespace fraudlens
