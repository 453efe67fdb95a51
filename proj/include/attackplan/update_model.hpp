#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace attackplan {

using VersionIndex = std::size_t;

/// Daily software-update Markov chain of one program. Rows of `transition`
/// are indexed by the current version, columns by the next version.
struct ProgramChain {
  std::string program;
  std::vector<std::string> versions;
  Eigen::MatrixXd transition;

  VersionIndex version_index(std::string_view version) const;
  /// Throws `Error(invalid_input)` unless square, in [0,1], rows summing to 1 within 1e-9.
  void validate() const;
};

/// Distribution over `chain.versions` after `days` steps from a point mass on `start`.
Eigen::RowVectorXd propagate_chain(const ProgramChain& chain, std::string_view start, int days);
Eigen::RowVectorXd propagate_chain(const ProgramChain& chain, const Eigen::RowVectorXd& start, int days);

/// One row of the compatibility table: under the listed parent versions
/// (aligned with `Dependency::parents`), only `allowed` child versions are compatible.
struct CompatibilityRule {
  std::vector<std::string> parent_versions;
  std::vector<std::string> allowed;
};

/// Dependency-DAG node. Parent assignments without a rule allow every version.
struct Dependency {
  std::string program;
  std::vector<std::string> parents;
  std::vector<CompatibilityRule> rules;
};

class UpdateModel {
 public:
  UpdateModel() = default;
  UpdateModel(std::vector<ProgramChain> chains, std::vector<Dependency> dependencies);

  bool has_program(std::string_view program) const;
  const ProgramChain& chain(std::string_view program) const;
  const std::vector<ProgramChain>& chains() const { return chains_; }
  const std::vector<Dependency>& dependencies() const { return dependencies_; }
  const std::vector<std::string>& parents(std::string_view program) const;

  /// delta(child = version, parents = parent_versions) in {0, 1}.
  bool compatible(std::string_view program, VersionIndex version,
                  const std::vector<VersionIndex>& parent_versions) const;

 private:
  struct Compiled {
    std::vector<std::string> parents;
    std::map<std::vector<VersionIndex>, std::vector<bool>> allowed;
  };

  std::vector<ProgramChain> chains_;
  std::vector<Dependency> dependencies_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, Compiled, std::less<>> compiled_;
};

struct ProgramVersion {
  std::string program;
  std::string version;
};

/// Configuration I(m) of one machine at the last pentest.
struct MachineSnapshot {
  std::string machine;
  std::vector<ProgramVersion> programs;
};

struct SnapshotConfig {
  std::vector<MachineSnapshot> machines;
  int days = 0;

  const MachineSnapshot& machine(std::string_view id) const;
};

/// Exact distribution over full machine configurations. `programs` fixes the
/// column order of `Entry::versions`; entries follow mixed-radix order with
/// the first program varying slowest.
struct MachineBelief {
  struct Entry {
    std::vector<VersionIndex> versions;
    double probability = 0.0;
  };

  std::vector<std::string> programs;
  std::vector<std::vector<std::string>> version_names;  // per program
  std::vector<Entry> entries;

  std::size_t program_index(std::string_view program) const;
  std::string describe(const Entry& entry) const;
  double total() const;
};

/// Forward inference through the dependency DBN in topological order: each
/// program's chain marginal is restricted to delta-compatible versions and
/// renormalized per parent assignment. Mass below 1e-12 is dropped and the
/// remainder renormalized.
MachineBelief build_initial_belief(const UpdateModel& model, const SnapshotConfig& snapshot,
                                   std::string_view machine);

}  // namespace attackplan
