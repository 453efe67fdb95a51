#pragma once

#include <iosfwd>
#include <string>

#include "attackplan/pomdp.hpp"

namespace attackplan {

// Flat text dump of an explicit POMDP. Layout is described in docs/formats.md.
// Reals are written with 17 significant digits so a dump/parse cycle is exact.
void write_pomdp(std::ostream& out, const PomdpModel& model);
std::string dump_pomdp(const PomdpModel& model);

PomdpModel read_pomdp(std::istream& in);
PomdpModel parse_pomdp(const std::string& text);

}  // namespace attackplan
