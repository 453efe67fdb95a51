#include "attackplan/network.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "attackplan/error.hpp"

namespace attackplan {

bool Firewall::weaker_or_equal(const Firewall& other) const {
  return std::includes(other.blocked_ports.begin(), other.blocked_ports.end(),
                       blocked_ports.begin(), blocked_ports.end());
}

std::string to_string(const Firewall& firewall) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int port : firewall.blocked_ports) {
    if (!first) out << ',';
    out << port;
    first = false;
  }
  out << '}';
  return out.str();
}

LogicalNetwork::LogicalNetwork(std::vector<Subnetwork> subnets, const std::vector<EdgeSpec>& edges,
                               std::string_view root)
    : subnets_(std::move(subnets)) {
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> machines;
  for (const auto& s : subnets_) {
    if (s.id.empty()) fail(ErrorCategory::invalid_input, "subnet with empty id");
    if (!ids.insert(s.id).second)
      fail(ErrorCategory::invalid_input, "duplicate subnet id '" + s.id + "'");
    for (const auto& m : s.machines) {
      if (!machines.insert(m).second)
        fail(ErrorCategory::invalid_input, "machine '" + m + "' appears more than once");
    }
  }
  auto r = find(root);
  if (!r) fail(ErrorCategory::invalid_input, "root subnet '" + std::string(root) + "' not found");
  root_ = *r;
  if (!subnets_[root_].machines.empty())
    fail(ErrorCategory::invalid_input, "root subnet '" + subnets_[root_].id + "' must not hold machines");

  std::set<std::pair<SubnetIndex, SubnetIndex>> seen;
  for (const auto& e : edges) {
    auto from = find(e.from);
    auto to = find(e.to);
    if (!from) fail(ErrorCategory::invalid_input, "edge source '" + e.from + "' is not a subnet");
    if (!to) fail(ErrorCategory::invalid_input, "edge target '" + e.to + "' is not a subnet");
    if (*from == *to) fail(ErrorCategory::invalid_input, "self-loop on subnet '" + e.from + "'");
    if (!seen.emplace(*from, *to).second)
      fail(ErrorCategory::invalid_input, "parallel edge " + e.from + " -> " + e.to);
    for (int p : e.firewall.blocked_ports) {
      if (p <= 0)
        fail(ErrorCategory::invalid_input, "edge " + e.from + " -> " + e.to + ": port must be positive");
    }
    edges_.push_back(Edge{*from, *to, e.firewall});
  }
}

std::optional<SubnetIndex> LogicalNetwork::find(std::string_view id) const {
  for (SubnetIndex i = 0; i < subnets_.size(); ++i) {
    if (subnets_[i].id == id) return i;
  }
  return std::nullopt;
}

SubnetIndex LogicalNetwork::index_of(std::string_view id) const {
  auto i = find(id);
  if (!i) fail(ErrorCategory::invalid_input, "unknown subnet '" + std::string(id) + "'");
  return *i;
}

std::optional<SubnetIndex> LogicalNetwork::subnet_of_machine(std::string_view machine) const {
  for (SubnetIndex i = 0; i < subnets_.size(); ++i) {
    const auto& ms = subnets_[i].machines;
    if (std::find(ms.begin(), ms.end(), machine) != ms.end()) return i;
  }
  return std::nullopt;
}

const Edge* LogicalNetwork::edge(SubnetIndex from, SubnetIndex to) const {
  for (const auto& e : edges_) {
    if (e.from == from && e.to == to) return &e;
  }
  return nullptr;
}

std::vector<const Edge*> LogicalNetwork::out_edges(SubnetIndex from) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges_) {
    if (e.from == from) out.push_back(&e);
  }
  return out;
}

std::vector<const Edge*> LogicalNetwork::in_edges(SubnetIndex to) const {
  std::vector<const Edge*> in;
  for (const auto& e : edges_) {
    if (e.to == to) in.push_back(&e);
  }
  return in;
}

std::vector<std::string> LogicalNetwork::machine_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : subnets_) ids.insert(ids.end(), s.machines.begin(), s.machines.end());
  return ids;
}

std::vector<EdgeSpec> LogicalNetwork::edge_specs() const {
  std::vector<EdgeSpec> specs;
  specs.reserve(edges_.size());
  for (const auto& e : edges_) specs.push_back({subnets_[e.from].id, subnets_[e.to].id, e.firewall});
  return specs;
}

namespace {

std::vector<std::vector<SubnetIndex>> undirected_adjacency(const LogicalNetwork& net) {
  std::vector<std::set<SubnetIndex>> adj(net.subnet_count());
  for (const auto& e : net.edges()) {
    adj[e.from].insert(e.to);
    adj[e.to].insert(e.from);
  }
  std::vector<std::vector<SubnetIndex>> out(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v) out[v].assign(adj[v].begin(), adj[v].end());
  return out;
}

// Hopcroft-Tarjan with an explicit edge stack.
struct BlockFinder {
  const std::vector<std::vector<SubnetIndex>>& adj;
  std::vector<int> discovery;
  std::vector<int> low;
  std::vector<std::pair<SubnetIndex, SubnetIndex>> edge_stack;
  std::vector<std::vector<SubnetIndex>> blocks;
  std::vector<bool> articulation;
  int clock = 0;

  explicit BlockFinder(const std::vector<std::vector<SubnetIndex>>& a)
      : adj(a), discovery(a.size(), -1), low(a.size(), 0), articulation(a.size(), false) {}

  void pop_block(std::pair<SubnetIndex, SubnetIndex> until) {
    std::set<SubnetIndex> vertices;
    while (true) {
      auto e = edge_stack.back();
      edge_stack.pop_back();
      vertices.insert(e.first);
      vertices.insert(e.second);
      if (e == until) break;
    }
    blocks.emplace_back(vertices.begin(), vertices.end());
  }

  void visit(SubnetIndex v, std::optional<SubnetIndex> parent) {
    discovery[v] = low[v] = clock++;
    int children = 0;
    for (SubnetIndex w : adj[v]) {
      if (discovery[w] < 0) {
        ++children;
        edge_stack.emplace_back(v, w);
        visit(w, v);
        low[v] = std::min(low[v], low[w]);
        if (low[w] >= discovery[v]) {
          if (parent || children > 1) articulation[v] = true;
          pop_block({v, w});
        }
      } else if (!parent || w != *parent) {
        if (discovery[w] < discovery[v]) edge_stack.emplace_back(v, w);
        low[v] = std::min(low[v], discovery[w]);
      }
    }
  }

  void run() {
    for (SubnetIndex v = 0; v < adj.size(); ++v) {
      if (discovery[v] >= 0) continue;
      if (adj[v].empty()) {
        discovery[v] = clock++;
        blocks.push_back({v});
        continue;
      }
      visit(v, std::nullopt);
    }
    std::sort(blocks.begin(), blocks.end());
  }
};

}  // namespace

std::vector<std::vector<SubnetIndex>> biconnected_components(const LogicalNetwork& net) {
  auto adj = undirected_adjacency(net);
  BlockFinder finder(adj);
  finder.run();
  return finder.blocks;
}

std::vector<SubnetIndex> cut_vertices(const LogicalNetwork& net) {
  auto adj = undirected_adjacency(net);
  BlockFinder finder(adj);
  finder.run();
  std::vector<SubnetIndex> cuts;
  for (SubnetIndex v = 0; v < adj.size(); ++v) {
    if (finder.articulation[v]) cuts.push_back(v);
  }
  return cuts;
}

std::vector<SubnetIndex> ComponentTree::entries(const LogicalNetwork& net, std::size_t c) const {
  std::vector<SubnetIndex> out;
  const auto& comp = components.at(c);
  if (!comp.parent_subnet) return out;
  for (SubnetIndex v : comp.subnets) {
    if (net.edge(*comp.parent_subnet, v)) out.push_back(v);
  }
  return out;
}

CleanedNetwork clean_up(const LogicalNetwork& net) {
  // Directed reachability from the root.
  std::vector<bool> reachable(net.subnet_count(), false);
  std::deque<SubnetIndex> queue{net.root()};
  reachable[net.root()] = true;
  while (!queue.empty()) {
    SubnetIndex v = queue.front();
    queue.pop_front();
    for (const Edge* e : net.out_edges(v)) {
      if (!reachable[e->to]) {
        reachable[e->to] = true;
        queue.push_back(e->to);
      }
    }
  }

  std::vector<Subnetwork> kept;
  std::vector<std::optional<SubnetIndex>> remap(net.subnet_count());
  for (SubnetIndex v = 0; v < net.subnet_count(); ++v) {
    if (!reachable[v]) continue;
    remap[v] = kept.size();
    kept.push_back(net.subnet(v));
  }
  std::vector<EdgeSpec> kept_edges;
  for (const auto& e : net.edges()) {
    if (reachable[e.from] && reachable[e.to])
      kept_edges.push_back({net.subnet(e.from).id, net.subnet(e.to).id, e.firewall});
  }
  LogicalNetwork pruned(kept, kept_edges, net.subnet(net.root()).id);

  auto blocks = biconnected_components(pruned);
  const SubnetIndex root = pruned.root();

  ComponentTree tree;
  tree.component_of.assign(pruned.subnet_count(), 0);
  tree.components.push_back({{root}, std::nullopt, std::nullopt, {}});
  tree.order.push_back(0);

  std::vector<std::vector<std::size_t>> blocks_of(pruned.subnet_count());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (SubnetIndex v : blocks[b]) blocks_of[v].push_back(b);
  }
  std::vector<bool> used(blocks.size(), false);

  // Breadth-first over the block-cut tree: a block hangs off the vertex
  // through which it was first reached, which is its cut vertex nearest the root.
  std::deque<std::pair<SubnetIndex, std::size_t>> frontier{{root, 0}};
  while (!frontier.empty()) {
    auto [attach, owner] = frontier.front();
    frontier.pop_front();
    for (std::size_t b : blocks_of[attach]) {
      if (used[b]) continue;
      used[b] = true;
      std::vector<SubnetIndex> members;
      for (SubnetIndex v : blocks[b]) {
        if (v != attach) members.push_back(v);
      }
      if (members.empty()) continue;  // isolated root
      std::size_t id = tree.components.size();
      tree.components.push_back({members, attach, owner, {}});
      tree.components[owner].children.push_back(id);
      tree.order.push_back(id);
      for (SubnetIndex v : members) {
        tree.component_of[v] = id;
        frontier.emplace_back(v, id);
      }
    }
  }

  // Keep edges inside a component or from a component's parent subnet into it.
  std::vector<EdgeSpec> forward;
  for (const auto& e : pruned.edges()) {
    if (e.to == root) continue;
    std::size_t target = tree.component_of[e.to];
    bool inside = tree.component_of[e.from] == target && e.from != root;
    bool entering = tree.components[target].parent_subnet == e.from;
    if (inside || entering)
      forward.push_back({pruned.subnet(e.from).id, pruned.subnet(e.to).id, e.firewall});
  }
  LogicalNetwork cleaned(pruned.subnets(), forward, pruned.subnet(root).id);
  return CleanedNetwork{std::move(cleaned), std::move(tree)};
}

}  // namespace attackplan
