#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace attackplan {

using SubnetIndex = std::size_t;

/// Deny-list of ports. The empty firewall blocks nothing.
struct Firewall {
  std::set<int> blocked_ports;

  bool blocks(int port) const { return blocked_ports.count(port) != 0; }
  bool empty() const { return blocked_ports.empty(); }

  /// Subset order: a weaker firewall lets through at least as much.
  bool weaker_or_equal(const Firewall& other) const;

  friend bool operator==(const Firewall&, const Firewall&) = default;
  friend bool operator<(const Firewall& a, const Firewall& b) {
    return a.blocked_ports < b.blocked_ports;
  }
};

std::string to_string(const Firewall& firewall);

struct Subnetwork {
  std::string id;
  std::vector<std::string> machines;
};

struct EdgeSpec {
  std::string from;
  std::string to;
  Firewall firewall;
};

struct Edge {
  SubnetIndex from;
  SubnetIndex to;
  Firewall firewall;
};

/// Directed graph of fully connected subnetworks with firewall-labelled edges.
///
/// The attacker root is a dedicated subnet without machines; it is always
/// controlled. Construction validates every structural invariant and throws
/// `Error(invalid_input)` otherwise.
class LogicalNetwork {
 public:
  LogicalNetwork(std::vector<Subnetwork> subnets, const std::vector<EdgeSpec>& edges,
                 std::string_view root);

  std::size_t subnet_count() const { return subnets_.size(); }
  const Subnetwork& subnet(SubnetIndex i) const { return subnets_.at(i); }
  const std::vector<Subnetwork>& subnets() const { return subnets_; }
  const std::vector<Edge>& edges() const { return edges_; }
  SubnetIndex root() const { return root_; }

  std::optional<SubnetIndex> find(std::string_view id) const;
  SubnetIndex index_of(std::string_view id) const;

  /// Subnet holding `machine`, if any.
  std::optional<SubnetIndex> subnet_of_machine(std::string_view machine) const;

  /// The edge `from -> to`, or nullptr.
  const Edge* edge(SubnetIndex from, SubnetIndex to) const;
  std::vector<const Edge*> out_edges(SubnetIndex from) const;
  std::vector<const Edge*> in_edges(SubnetIndex to) const;

  std::vector<std::string> machine_ids() const;
  std::vector<EdgeSpec> edge_specs() const;

 private:
  std::vector<Subnetwork> subnets_;
  std::vector<Edge> edges_;
  SubnetIndex root_ = 0;
};

/// Biconnected components of the undirected view (edge directions and
/// opposite-edge pairs collapse). Each component is a sorted vertex list; cut
/// vertices appear in every component they join. Isolated vertices form
/// singleton components. Components are sorted lexicographically.
std::vector<std::vector<SubnetIndex>> biconnected_components(const LogicalNetwork& net);

/// Articulation points of the undirected view, sorted.
std::vector<SubnetIndex> cut_vertices(const LogicalNetwork& net);

struct ComponentTree {
  struct Component {
    std::vector<SubnetIndex> subnets;          // sorted
    std::optional<SubnetIndex> parent_subnet;  // unset only for the root component
    std::optional<std::size_t> parent_component;
    std::vector<std::size_t> children;
  };

  std::vector<Component> components;  // components[0] is {root}
  std::vector<std::size_t> order;     // ancestors before descendants
  std::vector<std::size_t> component_of;  // subnet -> component

  /// Subnets of `c` entered directly from its parent subnet.
  std::vector<SubnetIndex> entries(const LogicalNetwork& net, std::size_t c) const;
};

/// Result of clean-up: the pruned network and its rooted component tree.
/// Subnet indices in `tree` refer to `network`, not to the input network.
struct CleanedNetwork {
  LogicalNetwork network;
  ComponentTree tree;
};

/// Prunes subnets unreachable from the root under edge directions, decomposes
/// the rest into biconnected components, assigns each cut vertex to the
/// component nearest the root, makes the root a component of its own and
/// deletes edges that point back toward the root in the component tree.
CleanedNetwork clean_up(const LogicalNetwork& net);

}  // namespace attackplan
