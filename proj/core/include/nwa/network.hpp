#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nwa {

using PhaseMask = std::uint8_t;  // bit 0 = a, bit 1 = b, bit 2 = c

inline bool has_phase(PhaseMask m, int ph) { return (m >> ph) & 1; }
inline int phase_count(PhaseMask m) { return ((m >> 0) & 1) + ((m >> 1) & 1) + ((m >> 2) & 1); }
PhaseMask parse_phases(const std::string& s);  // "abc", "bc", ...
std::string phases_to_string(PhaseMask m);
inline const char* phase_name(int ph) { return ph == 0 ? "a" : ph == 1 ? "b" : "c"; }

struct TransformerSpec {
    double rating_kw_per_phase = 0.0;
    double upgrade_kw_per_phase = 0.0;
    double cost_usd = 0.0;
};

struct Bus {
    int index = -1;
    std::string id;
    PhaseMask phases = 0;
    bool der_candidate = false;
    bool bess_candidate = false;
    std::optional<TransformerSpec> transformer;
};

struct LineUpgrade {
    double delta_kw_per_phase = 0.0;
    double cost_usd = 0.0;
};

struct Line {
    int index = -1;
    int from = -1;
    int to = -1;
    std::string name;  // "from-to"
    PhaseMask phases = 0;
    double length_ft = 0.0;
    // Phase impedance matrix in ohms, symmetric, zero rows/cols for
    // absent phases.
    std::array<std::array<std::complex<double>, 3>, 3> z_ohm{};
    double rating_kw_per_phase = 0.0;
    std::optional<LineUpgrade> upgrade;
};

struct Feeder {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    int substation = -1;
    double vmin_pu2 = 0.91;
    double vmax_pu2 = 1.1;
    double base_kv = 4.16;
    double base_kva = 1000.0;

    double z_base_ohm() const { return base_kv * base_kv * 1000.0 / base_kva; }
    int bus_index(const std::string& id) const;  // -1 if absent
    /// Children adjacency rooted at the substation; valid once radial.
    std::vector<std::vector<int>> children_lines() const;
};

struct TimeSeriesSet {
    int steps = 0;
    double step_hours = 1.0;
    /// Reporting divisor: effective prices were pre-scaled by this factor so
    /// that the modeled horizon stands for a full year. 1.0 = no scaling.
    double annual_scale = 1.0;
    /// Constant power factor applied to kW loads to derive reactive demand.
    double load_power_factor = 1.0;
    /// loads[bus][phase] is empty or has `steps` entries (kW).
    std::vector<std::array<std::vector<double>, 3>> loads;
    std::vector<double> lmp;  // $/kWh, effective
    /// production[bus] is empty unless the bus is a DER candidate.
    std::vector<std::vector<double>> production;
    std::vector<int> period_of_step;
    std::vector<double> demand_price;  // $/kW per period, effective

    double load(int bus, int ph, int t) const {
        const auto& s = loads[bus][ph];
        return s.empty() ? 0.0 : s[t];
    }
};

struct PlannerEconomics {
    double r_e = 0.03;
    double r_c = 0.03;
    double r_wacc = 0.10;
    int n_years = 20;
    double bess_kw_cost = 300.0;
    double bess_kwh_cost = 250.0;
    double bess_efficiency = 0.96;
};

struct InvestorEconomics {
    double r_e = 0.03;
    double r_c = 0.03;
    double ror = 0.15;
    double der_kw_cost = 1600.0;
    double om_cost_per_kw_year = 17.0;
    double import_price = 0.15;  // $/kWh, effective
};

struct Economics {
    PlannerEconomics planner;
    InvestorEconomics investor;
};

struct DerSite {
    int bus = -1;
    double cap_kw = 0.0;
};

struct BessSite {
    int bus = -1;
    double max_kw_per_phase = 2000.0;
    double max_kwh_per_phase = 12000.0;
};

struct CaseFile {
    std::string name;
    Feeder feeder;
    TimeSeriesSet series;
    Economics econ;
    std::vector<DerSite> der_sites;
    std::vector<BessSite> bess_sites;
    double price_cap = 0.0;  // x-bar-lambda, effective $/kWh
    std::vector<std::string> provenance;
    std::uint64_t hash = 0;

    const DerSite* der_site(int bus) const;
    const BessSite* bess_site(int bus) const;
    /// Total bus demand summed over phases at step t (kW).
    double bus_demand(int bus, int t) const;
    double peak_bus_demand(int bus) const;
};

struct RadialCheck {
    bool ok = false;
    std::string detail;  // offending edge/bus list when not ok
};

/// ok iff the energized lines form a spanning tree over the energized buses
/// and every phase of every bus is fed by a path carrying that phase.
RadialCheck validate_radial(const Feeder& feeder);

struct OverloadEntry {
    std::string component;  // "trfx:<bus>" or "line:<from>-<to>"
    double peak_kw = 0.0;    // coincident downstream demand, all phases
    double rating_kw = 0.0;  // rating summed over connected phases
    double percent = 0.0;    // 100 * max per-phase loading ratio
    bool overloaded = false;
};

/// Lossless screening: peak coincident downstream demand against ratings.
std::vector<OverloadEntry> overload_report(const CaseFile& c);

/// Loads and fully validates a case file (JSON document referencing CSV
/// series). Applied defaults are recorded in the returned provenance log.
/// Throws std::runtime_error with a descriptive message on any violation.
CaseFile load_case(const std::string& path);

/// Writes `name.json` plus the referenced CSV files into `dir`.
void write_case(const CaseFile& c, const std::string& dir);

}  // namespace nwa
