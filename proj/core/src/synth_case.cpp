#include "nwa/synth_case.hpp"

#include <cmath>
#include <stdexcept>

namespace nwa {

namespace {

constexpr double kPi = 3.14159265358979323846;

double prand01(std::uint64_t t) {
    std::uint64_t z = t + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) / 9007199254740992.0;
}

int add_bus(Feeder& f, const std::string& id, const std::string& phases) {
    Bus b;
    b.index = static_cast<int>(f.buses.size());
    b.id = id;
    b.phases = parse_phases(phases);
    f.buses.push_back(b);
    return b.index;
}

int add_line(Feeder& f, int from, int to, const std::string& phases, double length_ft,
             double rating_total_kw, double self_r, double self_x, double mutual_r,
             double mutual_x) {
    Line l;
    l.index = static_cast<int>(f.lines.size());
    l.from = from;
    l.to = to;
    l.name = f.buses[from].id + "-" + f.buses[to].id;
    l.phases = parse_phases(phases);
    l.length_ft = length_ft;
    l.rating_kw_per_phase = rating_total_kw / phase_count(l.phases);
    double s = length_ft / 1000.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            if (!has_phase(l.phases, r) || !has_phase(l.phases, c)) continue;
            l.z_ohm[r][c] = (r == c) ? std::complex<double>(self_r, self_x) * s
                                     : std::complex<double>(mutual_r, mutual_x) * s;
        }
    f.lines.push_back(l);
    return l.index;
}

}  // namespace

CaseFile make_ieee13_synth() {
    CaseFile c;
    c.name = "ieee13_synth";
    Feeder& f = c.feeder;
    f.base_kv = 4.16;
    f.base_kva = 1000.0;
    f.vmin_pu2 = 0.91;
    f.vmax_pu2 = 1.10;

    const int b650 = add_bus(f, "650", "abc");
    const int b632 = add_bus(f, "632", "abc");
    const int b633 = add_bus(f, "633", "abc");
    const int b634 = add_bus(f, "634", "abc");
    const int b645 = add_bus(f, "645", "bc");
    const int b646 = add_bus(f, "646", "bc");
    const int b671 = add_bus(f, "671", "abc");
    const int b680 = add_bus(f, "680", "abc");
    const int b684 = add_bus(f, "684", "ac");
    const int b611 = add_bus(f, "611", "c");
    const int b652 = add_bus(f, "652", "a");
    const int b692 = add_bus(f, "692", "abc");
    const int b675 = add_bus(f, "675", "abc");
    f.substation = b650;

    // Peak coincident demand per bus, split equally over connected phases.
    struct LoadSpec {
        int bus;
        double peak_kw;
    };
    const std::vector<LoadSpec> loads = {
        {b632, 200.0}, {b634, 572.0}, {b645, 100.0}, {b646, 220.0},
        {b671, 800.0}, {b611, 80.0},  {b652, 60.0},  {b675, 835.0},
    };

    // Secondary transformers sized for 143% / 111% / 167% peak loading.
    auto set_trfx = [&](int bus, double rating_total, double delta_total, double cost) {
        TransformerSpec t;
        int np = phase_count(f.buses[bus].phases);
        t.rating_kw_per_phase = rating_total / np;
        t.upgrade_kw_per_phase = delta_total / np;
        t.cost_usd = cost;
        f.buses[bus].transformer = t;
    };
    set_trfx(b634, 400.0, 400.0, 150000.0);
    set_trfx(b646, 220.0 / 1.11, 250.0, 150000.0);
    set_trfx(b675, 500.0, 500.0, 150000.0);

    const double sr = 0.08, sx = 0.16, mr = 0.015, mx = 0.045;  // ohm per 1000 ft
    add_line(f, b650, b632, "abc", 2000.0, 4587.2, sr, sx, mr, mx);
    const int l_632_633 = add_line(f, b632, b633, "abc", 500.0, 520.0, sr, sx, mr, mx);
    add_line(f, b633, b634, "abc", 100.0, 915.2, sr, sx, mr, mx);
    add_line(f, b632, b645, "bc", 500.0, 512.0, sr, sx, mr, mx);
    const int l_645_646 = add_line(f, b645, b646, "bc", 300.0, 200.0, sr, sx, mr, mx);
    add_line(f, b632, b671, "abc", 2000.0, 2840.0, sr, sx, mr, mx);
    add_line(f, b671, b680, "abc", 1000.0, 160.0, sr, sx, mr, mx);
    add_line(f, b671, b684, "ac", 300.0, 224.0, sr, sx, mr, mx);
    add_line(f, b684, b611, "c", 300.0, 128.0, sr, sx, mr, mx);
    add_line(f, b684, b652, "a", 800.0, 96.0, sr, sx, mr, mx);
    const int l_671_692 = add_line(f, b671, b692, "abc", 50.0, 835.0 / 1.1, sr, sx, mr, mx);
    const int l_692_675 = add_line(f, b692, b675, "abc", 500.0, 835.0 / 1.1, sr, sx, mr, mx);

    // Upgrades on the four overloaded line groups double the rating;
    // costs follow the length*200+15000 rule.
    for (int li : {l_632_633, l_645_646, l_671_692, l_692_675}) {
        Line& l = f.lines[li];
        LineUpgrade u;
        u.delta_kw_per_phase = l.rating_kw_per_phase;
        u.cost_usd = l.length_ft * 200.0 + 15000.0;
        l.upgrade = u;
    }

    // One week of hourly steps stands in for the year: recurring prices are
    // pre-scaled by 365/7 so model dollars are annual dollars.
    TimeSeriesSet& ts = c.series;
    const int T = 168;
    const double annual = 365.0 / 7.0;
    ts.steps = T;
    ts.step_hours = 1.0;
    ts.annual_scale = annual;
    ts.load_power_factor = 0.97;

    const double daymod[7] = {1.00, 0.96, 0.92, 0.97, 0.94, 0.86, 0.82};
    auto shape = [&](int t) {
        int d = t / 24, h = t % 24;
        double bell = std::exp(-std::pow((h - 15.0) / 4.0, 2.0));
        return (0.40 + 0.60 * bell) * daymod[d];
    };

    ts.loads.resize(f.buses.size());
    for (const LoadSpec& ls : loads) {
        const Bus& b = f.buses[ls.bus];
        int np = phase_count(b.phases);
        for (int ph = 0; ph < 3; ++ph) {
            if (!has_phase(b.phases, ph)) continue;
            auto& dst = ts.loads[ls.bus][ph];
            dst.resize(T);
            for (int t = 0; t < T; ++t) dst[t] = ls.peak_kw / np * shape(t);
        }
    }

    ts.lmp.resize(T);
    for (int t = 0; t < T; ++t) {
        int h = t % 24;
        double sinpart = std::max(0.0, std::sin(kPi * (h - 7.0) / 13.0));
        ts.lmp[t] = (0.032 + 0.014 * sinpart + 0.004 * prand01(t)) * annual;
    }

    // Clear-sky production, slight site-to-site scale differences.
    ts.production.resize(f.buses.size());
    auto fill_production = [&](int bus, double scale) {
        auto& dst = ts.production[bus];
        dst.resize(T);
        for (int t = 0; t < T; ++t) {
            double h = t % 24;
            double v = (h > 6.5 && h < 17.5) ? std::sin(kPi * (h - 6.5) / 11.0) : 0.0;
            dst[t] = scale * std::max(0.0, v);
        }
    };
    fill_production(b634, 0.95);
    fill_production(b646, 1.00);
    fill_production(b675, 0.90);

    ts.period_of_step.resize(T);
    for (int t = 0; t < T; ++t) ts.period_of_step[t] = t / 24;
    ts.demand_price.assign(7, 50.0 * 12.0 / 7.0);

    c.econ.planner = PlannerEconomics{};  // paper table values are defaults
    c.econ.investor = InvestorEconomics{};
    c.econ.investor.import_price = 0.15 * annual;

    // Site caps at the bus peak keep exports within existing line ratings;
    // the planner still has full peak-shaving range through the signal.
    c.der_sites.push_back({b634, 572.0});
    c.der_sites.push_back({b646, 220.0});
    c.der_sites.push_back({b675, 835.0});
    for (const DerSite& s : c.der_sites) f.buses[s.bus].der_candidate = true;
    c.bess_sites.push_back({b632, 1500.0, 9000.0});
    c.bess_sites.push_back({b634, 1500.0, 9000.0});
    for (const BessSite& s : c.bess_sites) f.buses[s.bus].bess_candidate = true;

    c.price_cap = c.econ.investor.import_price;
    c.provenance.push_back("synthetic case: ieee13 topology, week-for-year horizon");
    c.hash = 0x1ee13;  // fixed tag for in-memory construction
    return c;
}

CaseFile make_two_bus_case(double r_pu, double x_pu, double load_kw, int steps) {
    CaseFile c;
    c.name = "two_bus";
    Feeder& f = c.feeder;
    f.base_kv = 2.4;
    f.base_kva = 1000.0;
    f.vmin_pu2 = 0.8;
    f.vmax_pu2 = 1.2;
    int sub = add_bus(f, "sub", "a");
    int b1 = add_bus(f, "b1", "a");
    f.substation = sub;
    double zb = f.z_base_ohm();
    add_line(f, sub, b1, "a", 1000.0, 100.0 * std::max(1.0, load_kw), r_pu * zb, x_pu * zb, 0.0,
             0.0);

    TimeSeriesSet& ts = c.series;
    ts.steps = steps;
    ts.step_hours = 1.0;
    ts.annual_scale = 1.0;
    ts.loads.resize(f.buses.size());
    ts.loads[b1][0].assign(steps, load_kw);
    ts.lmp.assign(steps, 0.05);
    ts.production.resize(f.buses.size());
    ts.period_of_step.assign(steps, 0);
    ts.demand_price.assign(1, 0.0);
    c.econ.planner.n_years = 1;
    c.econ.planner.r_e = c.econ.planner.r_c = c.econ.planner.r_wacc = 0.0;
    c.econ.investor.r_e = c.econ.investor.r_c = c.econ.investor.ror = 0.0;
    c.price_cap = c.econ.investor.import_price;
    c.hash = 0x2b05;
    return c;
}

CaseFile make_bilevel_toy_case() {
    CaseFile c;
    c.name = "bilevel_toy";
    Feeder& f = c.feeder;
    f.base_kv = 2.4;
    f.base_kva = 1000.0;
    f.vmin_pu2 = 0.8;
    f.vmax_pu2 = 1.2;
    int sub = add_bus(f, "sub", "a");
    int d1 = add_bus(f, "d1", "a");
    f.substation = sub;
    add_line(f, sub, d1, "a", 500.0, 1000.0, 0.05, 0.1, 0.0, 0.0);

    TimeSeriesSet& ts = c.series;
    ts.steps = 2;
    ts.step_hours = 1.0;
    ts.annual_scale = 1.0;
    ts.loads.resize(f.buses.size());
    ts.loads[d1][0] = {10.0, 8.0};
    ts.lmp = {0.06, 0.05};
    ts.production.resize(f.buses.size());
    ts.production[d1] = {0.5, 1.0};
    ts.period_of_step = {0, 0};
    ts.demand_price = {1.0};

    c.econ.planner.n_years = 1;
    c.econ.planner.r_e = c.econ.planner.r_c = c.econ.planner.r_wacc = 0.0;
    c.econ.investor.r_e = c.econ.investor.r_c = c.econ.investor.ror = 0.0;
    c.econ.investor.der_kw_cost = 0.2;
    c.econ.investor.om_cost_per_kw_year = 0.0;
    c.econ.investor.import_price = 0.15;

    c.der_sites.push_back({d1, 20.0});
    f.buses[d1].der_candidate = true;
    c.price_cap = 0.15;
    c.hash = 0xb11e;
    return c;
}

}  // namespace nwa
