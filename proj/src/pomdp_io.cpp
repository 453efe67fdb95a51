#include "attackplan/pomdp_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "attackplan/error.hpp"

namespace attackplan {

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_name(const std::string& name, const char* what) {
  for (char c : name) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
      fail(ErrorCategory::invalid_input, std::string(what) + " name '" + name + "' contains whitespace");
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word(const char* what) {
    std::string w;
    if (!(in_ >> w)) fail(ErrorCategory::invalid_input, std::string("pomdp dump: expected ") + what);
    return w;
  }

  void keyword(const char* k) {
    auto w = word(k);
    if (w != k) fail(ErrorCategory::invalid_input, std::string("pomdp dump: expected '") + k + "', got '" + w + "'");
  }

  std::size_t index(const char* what, std::size_t bound) {
    auto w = word(what);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(w, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != w.size() || w.empty() || w[0] == '-')
      fail(ErrorCategory::invalid_input, std::string("pomdp dump: bad ") + what + " '" + w + "'");
    if (v >= bound) fail(ErrorCategory::invalid_input, std::string("pomdp dump: ") + what + " out of range");
    return static_cast<std::size_t>(v);
  }

  std::size_t count(const char* what) { return index(what, static_cast<std::size_t>(-1)); }

  double number(const char* what) {
    auto w = word(what);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != w.size() || w.empty())
      fail(ErrorCategory::invalid_input, std::string("pomdp dump: bad ") + what + " '" + w + "'");
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_pomdp(std::ostream& out, const PomdpModel& model) {
  out << "pomdp v1\n";
  out << "states " << model.state_count() << '\n';
  for (const auto& s : model.states()) {
    check_name(s, "state");
    out << s << '\n';
  }
  out << "actions " << model.action_count() << '\n';
  for (const auto& a : model.actions()) {
    check_name(a.name, "action");
    out << a.name << ' ' << real(a.time_cost) << ' ' << real(a.detection_cost) << '\n';
  }
  out << "observations " << model.observation_count() << '\n';
  for (const auto& o : model.observations()) {
    check_name(o, "observation");
    out << o << '\n';
  }
  out << "terminal " << model.terminal() << '\n';
  out << "terminate " << model.terminate() << '\n';
  out << "transitions\n";
  for (StateId s = 0; s < model.state_count(); ++s) {
    for (ActionId a = 0; a < model.action_count(); ++a) {
      const auto& o = model.outcome(s, a);
      out << s << ' ' << a << ' ' << o.next << ' ' << o.observation << ' ' << real(o.gain) << '\n';
    }
  }
  const auto& b0 = model.initial_belief().entries();
  out << "belief " << b0.size() << '\n';
  for (const auto& [s, p] : b0) out << s << ' ' << real(p) << '\n';
  out << "end\n";
}

std::string dump_pomdp(const PomdpModel& model) {
  std::ostringstream out;
  write_pomdp(out, model);
  return out.str();
}

PomdpModel read_pomdp(std::istream& in) {
  Reader r(in);
  r.keyword("pomdp");
  r.keyword("v1");

  r.keyword("states");
  std::vector<std::string> states(r.count("state count"));
  for (auto& s : states) s = r.word("state name");

  r.keyword("actions");
  std::vector<ActionInfo> actions(r.count("action count"));
  for (auto& a : actions) {
    a.name = r.word("action name");
    a.time_cost = r.number("time cost");
    a.detection_cost = r.number("detection cost");
  }

  r.keyword("observations");
  std::vector<std::string> observations(r.count("observation count"));
  for (auto& o : observations) o = r.word("observation name");

  r.keyword("terminal");
  StateId terminal = r.index("terminal", states.size());
  r.keyword("terminate");
  ActionId terminate = r.index("terminate", actions.size());

  r.keyword("transitions");
  std::vector<Outcome> outcomes(states.size() * actions.size());
  for (std::size_t row = 0; row < outcomes.size(); ++row) {
    StateId s = r.index("state", states.size());
    ActionId a = r.index("action", actions.size());
    if (s * actions.size() + a != row)
      fail(ErrorCategory::invalid_input, "pomdp dump: transitions must be listed in state-major order");
    auto& o = outcomes[row];
    o.next = r.index("next state", states.size());
    o.observation = r.index("observation", observations.size());
    o.gain = r.number("gain");
  }

  r.keyword("belief");
  std::size_t n = r.count("belief size");
  std::vector<std::pair<StateId, double>> entries;
  for (std::size_t i = 0; i < n; ++i) {
    StateId s = r.index("belief state", states.size());
    entries.emplace_back(s, r.number("probability"));
  }
  r.keyword("end");
  return PomdpModel(std::move(states), std::move(actions), std::move(observations), terminal, terminate,
                    std::move(outcomes), Belief(std::move(entries)));
}

PomdpModel parse_pomdp(const std::string& text) {
  std::istringstream in(text);
  auto model = read_pomdp(in);
  std::string rest;
  if (in >> rest) fail(ErrorCategory::invalid_input, "pomdp dump: trailing content after 'end'");
  return model;
}

}  // namespace attackplan
