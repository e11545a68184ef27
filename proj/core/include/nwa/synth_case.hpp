#pragma once

#include "nwa/network.hpp"

namespace nwa {

/// Bundled synthetic planning case: IEEE-13 topology, one week of hourly
/// steps standing for a year (prices pre-annualized), loads scaled so that
/// the secondary transformers at 634/646/675 peak at 143%/111%/167% of
/// rating and four line groups peak at 110%.
CaseFile make_ieee13_synth();

/// Two-bus single-phase case for power-flow analytics. Impedance is given
/// in per-unit on the case bases; the load is flat across the horizon.
CaseFile make_two_bus_case(double r_pu, double x_pu, double load_kw, int steps);

/// One-DER-bus, two-step bilevel toy sized for exhaustive price-grid search.
CaseFile make_bilevel_toy_case();

}  // namespace nwa
