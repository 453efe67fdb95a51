#include "attackplan/update_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "attackplan/error.hpp"

namespace attackplan {

namespace {
constexpr double kStochasticTolerance = 1e-9;
constexpr double kPruneMass = 1e-12;
}  // namespace

VersionIndex ProgramChain::version_index(std::string_view version) const {
  auto it = std::find(versions.begin(), versions.end(), version);
  if (it == versions.end())
    fail(ErrorCategory::invalid_input,
         "program '" + program + "' has no version '" + std::string(version) + "'");
  return static_cast<VersionIndex>(it - versions.begin());
}

void ProgramChain::validate() const {
  const auto n = static_cast<Eigen::Index>(versions.size());
  if (n == 0) fail(ErrorCategory::invalid_input, "chain '" + program + "' has no versions");
  std::set<std::string> unique(versions.begin(), versions.end());
  if (unique.size() != versions.size())
    fail(ErrorCategory::invalid_input, "chain '" + program + "' repeats a version name");
  if (transition.rows() != n || transition.cols() != n)
    fail(ErrorCategory::invalid_input, "chain '" + program + "': transition matrix must be " +
                                           std::to_string(n) + "x" + std::to_string(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      double p = transition(r, c);
      if (!(p >= 0.0 && p <= 1.0))
        fail(ErrorCategory::invalid_input, "chain '" + program + "': probability out of [0,1] in row " +
                                               std::to_string(r));
    }
    if (std::abs(transition.row(r).sum() - 1.0) > kStochasticTolerance)
      fail(ErrorCategory::invalid_input,
           "chain '" + program + "': row " + std::to_string(r) + " does not sum to 1");
  }
}

Eigen::RowVectorXd propagate_chain(const ProgramChain& chain, const Eigen::RowVectorXd& start, int days) {
  if (days < 0) fail(ErrorCategory::invalid_input, "days must be non-negative");
  if (start.size() != chain.transition.rows())
    fail(ErrorCategory::invalid_input, "start distribution size mismatch for '" + chain.program + "'");
  Eigen::RowVectorXd dist = start;
  for (int d = 0; d < days; ++d) dist = dist * chain.transition;
  return dist;
}

Eigen::RowVectorXd propagate_chain(const ProgramChain& chain, std::string_view start, int days) {
  Eigen::RowVectorXd point = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(chain.versions.size()));
  point(static_cast<Eigen::Index>(chain.version_index(start))) = 1.0;
  return propagate_chain(chain, point, days);
}

UpdateModel::UpdateModel(std::vector<ProgramChain> chains, std::vector<Dependency> dependencies)
    : chains_(std::move(chains)), dependencies_(std::move(dependencies)) {
  for (std::size_t i = 0; i < chains_.size(); ++i) {
    chains_[i].validate();
    if (!index_.emplace(chains_[i].program, i).second)
      fail(ErrorCategory::invalid_input, "duplicate chain for program '" + chains_[i].program + "'");
  }

  for (const auto& dep : dependencies_) {
    if (!has_program(dep.program))
      fail(ErrorCategory::invalid_input, "dependency on unknown program '" + dep.program + "'");
    if (compiled_.count(dep.program))
      fail(ErrorCategory::invalid_input, "program '" + dep.program + "' has two dependency entries");
    Compiled c;
    c.parents = dep.parents;
    const auto& child = chain(dep.program);
    for (const auto& p : dep.parents) {
      if (!has_program(p))
        fail(ErrorCategory::invalid_input, "program '" + dep.program + "' depends on unknown '" + p + "'");
      if (p == dep.program)
        fail(ErrorCategory::invalid_input, "program '" + p + "' depends on itself");
    }
    for (const auto& rule : dep.rules) {
      if (rule.parent_versions.size() != dep.parents.size())
        fail(ErrorCategory::invalid_input,
             "compatibility rule for '" + dep.program + "' lists the wrong number of parent versions");
      std::vector<VersionIndex> key;
      for (std::size_t k = 0; k < dep.parents.size(); ++k)
        key.push_back(chain(dep.parents[k]).version_index(rule.parent_versions[k]));
      if (rule.allowed.empty())
        fail(ErrorCategory::invalid_input,
             "compatibility rule for '" + dep.program + "' allows no version (dead-end configuration)");
      std::vector<bool> mask(child.versions.size(), false);
      for (const auto& v : rule.allowed) mask[child.version_index(v)] = true;
      if (!c.allowed.emplace(key, mask).second)
        fail(ErrorCategory::invalid_input, "duplicate compatibility rule for '" + dep.program + "'");
    }
    compiled_.emplace(dep.program, std::move(c));
  }

  // Acyclicity by depth-first colouring.
  std::map<std::string, int, std::less<>> colour;
  std::function<void(const std::string&)> visit = [&](const std::string& p) {
    int& c = colour[p];
    if (c == 2) return;
    if (c == 1) fail(ErrorCategory::invalid_input, "dependency graph has a cycle through '" + p + "'");
    c = 1;
    for (const auto& parent : parents(p)) visit(parent);
    colour[p] = 2;
  };
  for (const auto& ch : chains_) visit(ch.program);
}

bool UpdateModel::has_program(std::string_view program) const {
  return index_.find(program) != index_.end();
}

const ProgramChain& UpdateModel::chain(std::string_view program) const {
  auto it = index_.find(program);
  if (it == index_.end())
    fail(ErrorCategory::invalid_input, "no update chain for program '" + std::string(program) + "'");
  return chains_[it->second];
}

const std::vector<std::string>& UpdateModel::parents(std::string_view program) const {
  static const std::vector<std::string> none;
  auto it = compiled_.find(program);
  return it == compiled_.end() ? none : it->second.parents;
}

bool UpdateModel::compatible(std::string_view program, VersionIndex version,
                             const std::vector<VersionIndex>& parent_versions) const {
  auto it = compiled_.find(program);
  if (it == compiled_.end()) return true;
  auto rule = it->second.allowed.find(parent_versions);
  if (rule == it->second.allowed.end()) return true;
  return rule->second.at(version);
}

const MachineSnapshot& SnapshotConfig::machine(std::string_view id) const {
  for (const auto& m : machines) {
    if (m.machine == id) return m;
  }
  fail(ErrorCategory::invalid_input, "no snapshot for machine '" + std::string(id) + "'");
}

std::size_t MachineBelief::program_index(std::string_view program) const {
  auto it = std::find(programs.begin(), programs.end(), program);
  if (it == programs.end())
    fail(ErrorCategory::invalid_input, "belief has no program '" + std::string(program) + "'");
  return static_cast<std::size_t>(it - programs.begin());
}

std::string MachineBelief::describe(const Entry& entry) const {
  std::ostringstream out;
  out << "cfg[";
  for (std::size_t i = 0; i < programs.size(); ++i) {
    if (i) out << ',';
    out << programs[i] << '=' << version_names[i][entry.versions[i]];
  }
  out << ']';
  return out.str();
}

double MachineBelief::total() const {
  double t = 0.0;
  for (const auto& e : entries) t += e.probability;
  return t;
}

MachineBelief build_initial_belief(const UpdateModel& model, const SnapshotConfig& snapshot,
                                   std::string_view machine) {
  const auto& snap = snapshot.machine(machine);
  const std::size_t n = snap.programs.size();

  MachineBelief belief;
  std::vector<Eigen::RowVectorXd> marginals;
  for (const auto& pv : snap.programs) {
    if (std::find(belief.programs.begin(), belief.programs.end(), pv.program) != belief.programs.end())
      fail(ErrorCategory::invalid_input,
           "machine '" + snap.machine + "' lists program '" + pv.program + "' twice");
    const auto& chain = model.chain(pv.program);
    belief.programs.push_back(pv.program);
    belief.version_names.push_back(chain.versions);
    marginals.push_back(propagate_chain(chain, pv.version, snapshot.days));
  }

  // Parent positions and a topological order restricted to this machine.
  std::vector<std::vector<std::size_t>> parent_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : model.parents(belief.programs[i])) {
      auto it = std::find(belief.programs.begin(), belief.programs.end(), p);
      if (it == belief.programs.end())
        fail(ErrorCategory::invalid_input, "machine '" + snap.machine + "': program '" +
                                               belief.programs[i] + "' depends on '" + p +
                                               "', which is not installed");
      parent_pos[i].push_back(static_cast<std::size_t>(it - belief.programs.begin()));
    }
  }
  std::vector<std::size_t> topo;
  std::vector<bool> placed(n, false);
  while (topo.size() < n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      bool ready = std::all_of(parent_pos[i].begin(), parent_pos[i].end(),
                               [&](std::size_t p) { return placed[p]; });
      if (ready) {
        placed[i] = true;
        topo.push_back(i);
      }
    }
  }

  std::vector<VersionIndex> assignment(n, 0);
  std::vector<MachineBelief::Entry> raw;
  std::function<void(std::size_t, double)> expand = [&](std::size_t depth, double mass) {
    if (depth == n) {
      raw.push_back({assignment, mass});
      return;
    }
    const std::size_t x = topo[depth];
    std::vector<VersionIndex> pa;
    for (std::size_t p : parent_pos[x]) pa.push_back(assignment[p]);
    const auto& marginal = marginals[x];
    double z = 0.0;
    for (Eigen::Index v = 0; v < marginal.size(); ++v) {
      if (model.compatible(belief.programs[x], static_cast<VersionIndex>(v), pa)) z += marginal(v);
    }
    if (z <= 0.0) {
      std::ostringstream out;
      out << "machine '" << snap.machine << "': no reachable version of '" << belief.programs[x]
          << "' is compatible with parents [";
      for (std::size_t k = 0; k < pa.size(); ++k) {
        if (k) out << ',';
        out << belief.programs[parent_pos[x][k]] << '=' << belief.version_names[parent_pos[x][k]][pa[k]];
      }
      out << ']';
      fail(ErrorCategory::model, out.str());
    }
    for (Eigen::Index v = 0; v < marginal.size(); ++v) {
      const auto vi = static_cast<VersionIndex>(v);
      if (marginal(v) <= 0.0 || !model.compatible(belief.programs[x], vi, pa)) continue;
      assignment[x] = vi;
      expand(depth + 1, mass * marginal(v) / z);
    }
  };
  expand(0, 1.0);

  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.versions < b.versions; });
  double kept = 0.0;
  for (auto& e : raw) {
    if (e.probability >= kPruneMass) {
      kept += e.probability;
      belief.entries.push_back(std::move(e));
    }
  }
  for (auto& e : belief.entries) e.probability /= kept;
  return belief;
}

}  // namespace attackplan
