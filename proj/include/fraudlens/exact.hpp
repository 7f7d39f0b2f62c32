#pragma once

namespace fraudlens {

using u128 = unsigned __int128;
using i128 = __int128;

/// Correctly rounded (round-half-even) double nearest to num / den.
/// Requires den > 0 and den < 2^127.
double ratio_to_double(u128 num, u128 den);

}  // namespace fraudlens
