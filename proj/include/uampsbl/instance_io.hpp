#pragma once

#include "uampsbl/model.hpp"

#include <iosfwd>
#include <string>

namespace uampsbl {

/// Plain-text instance format:
///
///     uampsbl-instance v1
///     beta <value|inf>
///     A <rows> <cols>
///     <row-major values>
///     X <rows> <cols>
///     ...
///     Y <rows> <cols>
///     ...
///     support <k> <i0> <i1> ...
///
/// Values are written with 17 significant digits, so a round trip is exact.
void save_instance(std::ostream& os, const ProblemInstance& inst);
ProblemInstance load_instance(std::istream& is);

void save_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance load_instance(const std::string& path);

} // namespace uampsbl
