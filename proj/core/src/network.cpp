#include "nwa/network.hpp"

#include "nwa/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nwa {

using nlohmann::json;

PhaseMask parse_phases(const std::string& s) {
    PhaseMask m = 0;
    for (char c : s) {
        switch (c) {
            case 'a': m |= 1; break;
            case 'b': m |= 2; break;
            case 'c': m |= 4; break;
            default: throw std::runtime_error("bad phase letter: " + s);
        }
    }
    if (m == 0) throw std::runtime_error("empty phase set");
    return m;
}

std::string phases_to_string(PhaseMask m) {
    std::string s;
    if (m & 1) s += 'a';
    if (m & 2) s += 'b';
    if (m & 4) s += 'c';
    return s;
}

int Feeder::bus_index(const std::string& id) const {
    for (const Bus& b : buses)
        if (b.id == id) return b.index;
    return -1;
}

std::vector<std::vector<int>> Feeder::children_lines() const {
    std::vector<std::vector<int>> out(buses.size());
    // Orient lines away from the substation by BFS.
    std::vector<std::vector<int>> adj(buses.size());
    for (const Line& l : lines) {
        adj[l.from].push_back(l.index);
        adj[l.to].push_back(l.index);
    }
    std::vector<char> seen(buses.size(), 0);
    std::vector<int> queue{substation};
    seen[substation] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
        int b = queue[q];
        for (int li : adj[b]) {
            const Line& l = lines[li];
            int other = l.from == b ? l.to : l.from;
            if (seen[other]) continue;
            seen[other] = 1;
            out[b].push_back(li);
            queue.push_back(other);
        }
    }
    return out;
}

const DerSite* CaseFile::der_site(int bus) const {
    for (const DerSite& s : der_sites)
        if (s.bus == bus) return &s;
    return nullptr;
}

const BessSite* CaseFile::bess_site(int bus) const {
    for (const BessSite& s : bess_sites)
        if (s.bus == bus) return &s;
    return nullptr;
}

double CaseFile::bus_demand(int bus, int t) const {
    double d = 0.0;
    for (int ph = 0; ph < 3; ++ph) d += series.load(bus, ph, t);
    return d;
}

double CaseFile::peak_bus_demand(int bus) const {
    double peak = 0.0;
    for (int t = 0; t < series.steps; ++t) peak = std::max(peak, bus_demand(bus, t));
    return peak;
}

RadialCheck validate_radial(const Feeder& feeder) {
    const std::size_t n = feeder.buses.size();
    if (feeder.substation < 0 || feeder.substation >= static_cast<int>(n))
        return {false, "substation bus missing"};

    // Union-find cycle detection.
    std::vector<int> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Line& l : feeder.lines) {
        int a = find(l.from), b = find(l.to);
        if (a == b) return {false, "cycle closed by line " + l.name};
        parent[a] = b;
    }
    int root = find(feeder.substation);
    std::string orphans;
    for (const Bus& b : feeder.buses) {
        if (find(b.index) != root) orphans += (orphans.empty() ? "" : ", ") + b.id;
    }
    if (!orphans.empty()) return {false, "disconnected buses: " + orphans};

    // Phase continuity: walk from the substation carrying available phases.
    auto kids = feeder.children_lines();
    std::vector<PhaseMask> reach(n, 0);
    reach[feeder.substation] = feeder.buses[feeder.substation].phases;
    std::vector<int> stack{feeder.substation};
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int li : kids[b]) {
            const Line& l = feeder.lines[li];
            int child = (l.from == b) ? l.to : l.from;
            reach[child] = static_cast<PhaseMask>(reach[b] & l.phases);
            stack.push_back(child);
        }
    }
    for (const Bus& b : feeder.buses) {
        PhaseMask missing = static_cast<PhaseMask>(b.phases & ~reach[b.index]);
        if (missing)
            return {false, "bus " + b.id + " phase(s) " + phases_to_string(missing) +
                               " not energized from the substation"};
    }
    return {true, ""};
}

std::vector<OverloadEntry> overload_report(const CaseFile& c) {
    const Feeder& f = c.feeder;
    const int T = c.series.steps;
    std::vector<OverloadEntry> out;

    // Subtree accumulation per phase via post-order on the tree.
    auto kids = f.children_lines();
    // downstream[bus][ph][t] = sum of loads in subtree(bus) on phase ph.
    std::vector<std::array<std::vector<double>, 3>> down(f.buses.size());
    std::function<void(int)> accumulate = [&](int b) {
        for (int ph = 0; ph < 3; ++ph) {
            down[b][ph].assign(T, 0.0);
            for (int t = 0; t < T; ++t) down[b][ph][t] = c.series.load(b, ph, t);
        }
        for (int li : kids[b]) {
            const Line& l = f.lines[li];
            int child = (l.from == b) ? l.to : l.from;
            accumulate(child);
            for (int ph = 0; ph < 3; ++ph)
                for (int t = 0; t < T; ++t) down[b][ph][t] += down[child][ph][t];
        }
    };
    accumulate(f.substation);

    auto phase_peak_ratio = [&](const std::array<std::vector<double>, 3>& series, PhaseMask phases,
                                double rating_per_phase, double* peak_total) {
        double worst = 0.0;
        double peak = 0.0;
        for (int t = 0; t < T; ++t) {
            double total = 0.0;
            for (int ph = 0; ph < 3; ++ph) {
                if (!has_phase(phases, ph)) continue;
                double v = series[ph].empty() ? 0.0 : series[ph][t];
                total += v;
                worst = std::max(worst, v / rating_per_phase);
            }
            peak = std::max(peak, total);
        }
        *peak_total = peak;
        return worst;
    };

    for (const Bus& b : f.buses) {
        if (!b.transformer) continue;
        std::array<std::vector<double>, 3> own;
        for (int ph = 0; ph < 3; ++ph) {
            own[ph].assign(T, 0.0);
            for (int t = 0; t < T; ++t) own[ph][t] = c.series.load(b.index, ph, t);
        }
        double peak = 0.0;
        double ratio = phase_peak_ratio(own, b.phases, b.transformer->rating_kw_per_phase, &peak);
        OverloadEntry e;
        e.component = "trfx:" + b.id;
        e.peak_kw = peak;
        e.rating_kw = b.transformer->rating_kw_per_phase * phase_count(b.phases);
        e.percent = 100.0 * ratio;
        e.overloaded = e.percent > 100.0 + 1e-9;
        out.push_back(e);
    }
    for (const Line& l : f.lines) {
        // Flow on the line = demand of the subtree hanging off its far end.
        int far = l.to;
        // children_lines oriented away from substation: find orientation.
        // The far end is whichever side is NOT on the substation side; the
        // BFS parent structure implies l is in kids[near].
        // Recover: if l appears in kids[l.from], far end is l.to, else l.from.
        bool from_is_near = false;
        for (int li : kids[l.from])
            if (li == l.index) from_is_near = true;
        far = from_is_near ? l.to : l.from;
        double peak = 0.0;
        double ratio = phase_peak_ratio(down[far], l.phases, l.rating_kw_per_phase, &peak);
        OverloadEntry e;
        e.component = "line:" + l.name;
        e.peak_kw = peak;
        e.rating_kw = l.rating_kw_per_phase * phase_count(l.phases);
        e.percent = 100.0 * ratio;
        e.overloaded = e.percent > 100.0 + 1e-9;
        out.push_back(e);
    }
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string dir_of(const std::string& path) {
    auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::string& text, const std::string& what) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = cells;
            first = false;
        } else {
            t.rows.push_back(cells);
        }
    }
    if (t.header.empty()) throw std::runtime_error(what + ": empty csv");
    return t;
}

double to_num(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::runtime_error(what + ": bad number '" + s + "'");
    }
}

}  // namespace

CaseFile load_case(const std::string& path) {
    const std::string text = read_file(path);
    std::uint64_t h = fnv1a(text);
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error("case parse error: " + std::string(e.what()));
    }

    CaseFile c;
    auto req = [&](const json& o, const char* key) -> const json& {
        auto it = o.find(key);
        if (it == o.end()) throw std::runtime_error(std::string("case: missing field '") + key + "'");
        return *it;
    };

    c.name = req(j, "name").get<std::string>();
    Feeder& f = c.feeder;
    f.base_kv = req(j, "base_kv").get<double>();
    f.base_kva = req(j, "base_kva").get<double>();
    if (f.base_kv <= 0 || f.base_kva <= 0) throw std::runtime_error("case: bases must be positive");
    if (j.contains("voltage_bounds_pu2")) {
        f.vmin_pu2 = req(j["voltage_bounds_pu2"], "min").get<double>();
        f.vmax_pu2 = req(j["voltage_bounds_pu2"], "max").get<double>();
    } else {
        f.vmin_pu2 = 0.91;
        f.vmax_pu2 = 1.1;
        c.provenance.push_back("default: voltage bounds 0.91/1.1 pu^2");
    }
    if (f.vmin_pu2 <= 0 || f.vmin_pu2 >= f.vmax_pu2)
        throw std::runtime_error("case: bad voltage bounds");

    for (const json& jb : req(j, "buses")) {
        Bus b;
        b.index = static_cast<int>(f.buses.size());
        b.id = req(jb, "id").get<std::string>();
        if (f.bus_index(b.id) >= 0) throw std::runtime_error("case: duplicate bus id " + b.id);
        b.index = static_cast<int>(f.buses.size());
        b.phases = parse_phases(req(jb, "phases").get<std::string>());
        if (jb.contains("transformer")) {
            const json& jt = jb["transformer"];
            TransformerSpec t;
            t.rating_kw_per_phase = req(jt, "rating_kw_per_phase").get<double>();
            t.upgrade_kw_per_phase = req(jt, "upgrade_kw_per_phase").get<double>();
            t.cost_usd = req(jt, "cost_usd").get<double>();
            if (t.rating_kw_per_phase <= 0)
                throw std::runtime_error("case: transformer rating must be positive at " + b.id);
            b.transformer = t;
        }
        f.buses.push_back(b);
    }
    const std::string sub_id = req(j, "substation").get<std::string>();
    f.substation = f.bus_index(sub_id);
    if (f.substation < 0) throw std::runtime_error("case: unknown substation bus " + sub_id);

    for (const json& jl : req(j, "lines")) {
        Line l;
        l.index = static_cast<int>(f.lines.size());
        const std::string from = req(jl, "from").get<std::string>();
        const std::string to = req(jl, "to").get<std::string>();
        l.from = f.bus_index(from);
        l.to = f.bus_index(to);
        if (l.from < 0 || l.to < 0)
            throw std::runtime_error("case: line references unknown bus " + from + "-" + to);
        l.name = from + "-" + to;
        l.phases = parse_phases(req(jl, "phases").get<std::string>());
        PhaseMask endpoints = static_cast<PhaseMask>(f.buses[l.from].phases & f.buses[l.to].phases);
        if ((l.phases & ~endpoints) != 0)
            throw std::runtime_error("case: line " + l.name + " carries phases its endpoints lack");
        l.length_ft = req(jl, "length_ft").get<double>();
        l.rating_kw_per_phase = req(jl, "rating_kw_per_phase").get<double>();
        if (l.rating_kw_per_phase <= 0)
            throw std::runtime_error("case: line rating must be positive: " + l.name);

        if (jl.contains("z_matrix_ohm")) {
            const json& zm = jl["z_matrix_ohm"];
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) {
                    l.z_ohm[r][cc] = {zm.at(r).at(cc).at(0).get<double>(),
                                      zm.at(r).at(cc).at(1).get<double>()};
                }
        } else {
            const json& zs = req(jl, "impedance_ohm_per_1000ft");
            double sr = req(zs, "self_r").get<double>(), sx = req(zs, "self_x").get<double>();
            double mr = zs.value("mutual_r", 0.0), mx = zs.value("mutual_x", 0.0);
            double scale = l.length_ft / 1000.0;
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) {
                    if (!has_phase(l.phases, r) || !has_phase(l.phases, cc)) continue;
                    l.z_ohm[r][cc] = (r == cc) ? std::complex<double>(sr, sx) * scale
                                               : std::complex<double>(mr, mx) * scale;
                }
        }
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) {
                if (!has_phase(l.phases, r) || !has_phase(l.phases, cc)) {
                    if (std::abs(l.z_ohm[r][cc]) != 0.0)
                        throw std::runtime_error("case: impedance on absent phase: " + l.name);
                }
                if (std::abs(l.z_ohm[r][cc] - l.z_ohm[cc][r]) > 1e-9)
                    throw std::runtime_error("case: impedance matrix not symmetric: " + l.name);
            }
        if (jl.contains("upgrade")) {
            LineUpgrade u;
            const json& ju = jl["upgrade"];
            u.delta_kw_per_phase = req(ju, "delta_kw_per_phase").get<double>();
            if (ju.contains("cost_usd")) {
                u.cost_usd = ju["cost_usd"].get<double>();
            } else {
                // Table-driven rule: length x 200 + 15,000, resolved at load
                // time so the optimizer sees a constant.
                u.cost_usd = l.length_ft * 200.0 + 15000.0;
                c.provenance.push_back("line " + l.name + ": upgrade cost from rule length*200+15000 = " +
                                       std::to_string(u.cost_usd));
            }
            l.upgrade = u;
        }
        f.lines.push_back(l);
    }

    RadialCheck rad = validate_radial(f);
    if (!rad.ok) throw std::runtime_error("case: not radial: " + rad.detail);

    // Time series.
    const json& jh = req(j, "horizon");
    TimeSeriesSet& ts = c.series;
    ts.steps = req(jh, "steps").get<int>();
    if (ts.steps < 1) throw std::runtime_error("case: horizon must have at least one step");
    ts.step_hours = jh.value("step_hours", 1.0);
    ts.annual_scale = jh.value("annual_scale", 1.0);
    ts.load_power_factor = jh.value("load_power_factor", 1.0);
    if (ts.load_power_factor <= 0.0 || ts.load_power_factor > 1.0)
        throw std::runtime_error("case: load power factor must lie in (0,1]");
    const int T = ts.steps;

    const json& js = req(j, "series");
    const std::string base = dir_of(path);
    auto load_csv = [&](const std::string& rel) {
        std::string bytes = read_file(base + "/" + rel);
        h = fnv1a(bytes, h);
        return parse_csv(bytes, rel);
    };

    ts.loads.resize(f.buses.size());
    {
        CsvTable t = load_csv(req(js, "loads_csv").get<std::string>());
        if (t.header.size() != static_cast<std::size_t>(T) + 2 || t.header[0] != "bus" ||
            t.header[1] != "phase")
            throw std::runtime_error("loads csv: header must be bus,phase,t0..t" +
                                     std::to_string(T - 1));
        for (const auto& row : t.rows) {
            if (row.size() != static_cast<std::size_t>(T) + 2)
                throw std::runtime_error("loads csv: series length mismatch for bus " + row[0] +
                                         " (want " + std::to_string(T) + ")");
            int bi = f.bus_index(row[0]);
            if (bi < 0) throw std::runtime_error("loads csv: unknown bus " + row[0]);
            PhaseMask pm = parse_phases(row[1]);
            for (int ph = 0; ph < 3; ++ph) {
                if (!has_phase(pm, ph)) continue;
                if (!has_phase(f.buses[bi].phases, ph))
                    throw std::runtime_error("loads csv: bus " + row[0] + " lacks phase " +
                                             phase_name(ph));
                auto& dst = ts.loads[bi][ph];
                if (!dst.empty()) throw std::runtime_error("loads csv: duplicate series for " +
                                                           row[0] + phase_name(ph));
                dst.resize(T);
                for (int t2 = 0; t2 < T; ++t2) {
                    dst[t2] = to_num(row[t2 + 2], "loads csv");
                    if (dst[t2] < 0) throw std::runtime_error("loads csv: negative load");
                }
            }
        }
    }
    {
        CsvTable t = load_csv(req(js, "lmp_csv").get<std::string>());
        if (t.rows.size() != 1 || t.rows[0].size() != static_cast<std::size_t>(T) + 1)
            throw std::runtime_error("lmp csv: want one data row with " + std::to_string(T) +
                                     " values");
        ts.lmp.resize(T);
        for (int t2 = 0; t2 < T; ++t2) ts.lmp[t2] = to_num(t.rows[0][t2 + 1], "lmp csv");
    }
    ts.production.resize(f.buses.size());
    {
        CsvTable t = load_csv(req(js, "production_csv").get<std::string>());
        for (const auto& row : t.rows) {
            if (row.size() != static_cast<std::size_t>(T) + 1)
                throw std::runtime_error("production csv: series length mismatch for bus " + row[0]);
            int bi = f.bus_index(row[0]);
            if (bi < 0) throw std::runtime_error("production csv: unknown bus " + row[0]);
            auto& dst = ts.production[bi];
            dst.resize(T);
            for (int t2 = 0; t2 < T; ++t2) {
                dst[t2] = to_num(row[t2 + 1], "production csv");
                if (dst[t2] < 0.0 || dst[t2] > 1.0)
                    throw std::runtime_error("production csv: factor outside [0,1]");
            }
        }
    }

    if (j.contains("demand_periods")) {
        const json& jd = j["demand_periods"];
        ts.period_of_step = req(jd, "period_of_step").get<std::vector<int>>();
        ts.demand_price = req(jd, "price_usd_per_kw").get<std::vector<double>>();
        if (ts.period_of_step.size() != static_cast<std::size_t>(T))
            throw std::runtime_error("case: demand period map must cover every step");
        for (int p : ts.period_of_step)
            if (p < 0 || p >= static_cast<int>(ts.demand_price.size()))
                throw std::runtime_error("case: demand period out of range");
    } else {
        // Default: 12 equal periods over the horizon (synthetic calendar).
        int periods = std::min(12, T);
        ts.period_of_step.resize(T);
        for (int t2 = 0; t2 < T; ++t2)
            ts.period_of_step[t2] = std::min(periods - 1, t2 * periods / T);
        ts.demand_price.assign(periods, 50.0);
        c.provenance.push_back("default: 12 equal demand periods at 50 $/kW");
    }

    // Economics.
    const json& je = req(j, "economics");
    const json& jp = req(je, "planner");
    PlannerEconomics& pe = c.econ.planner;
    pe.r_e = req(jp, "r_e").get<double>();
    pe.r_c = req(jp, "r_c").get<double>();
    pe.r_wacc = req(jp, "r_wacc").get<double>();
    pe.n_years = req(jp, "n_years").get<int>();
    pe.bess_kw_cost = req(jp, "bess_kw_cost").get<double>();
    pe.bess_kwh_cost = req(jp, "bess_kwh_cost").get<double>();
    pe.bess_efficiency = req(jp, "bess_efficiency").get<double>();
    const json& ji = req(je, "investor");
    InvestorEconomics& ie = c.econ.investor;
    ie.r_e = req(ji, "r_e").get<double>();
    ie.r_c = req(ji, "r_c").get<double>();
    ie.ror = req(ji, "ror").get<double>();
    ie.der_kw_cost = req(ji, "der_kw_cost").get<double>();
    ie.om_cost_per_kw_year = req(ji, "om_cost_per_kw_year").get<double>();
    ie.import_price = req(ji, "import_price").get<double>();
    for (double r : {pe.r_e, pe.r_c, pe.r_wacc, ie.r_e, ie.r_c, ie.ror})
        if (r < 0.0 || r >= 1.0) throw std::runtime_error("case: rates must lie in [0,1)");
    if (pe.n_years < 1) throw std::runtime_error("case: n_years must be >= 1");
    if (pe.bess_efficiency <= 0.0 || pe.bess_efficiency > 1.0)
        throw std::runtime_error("case: efficiency must lie in (0,1]");

    // Candidate sites.
    if (j.contains("der")) {
        for (const json& jd : req(j["der"], "sites")) {
            DerSite s;
            const std::string id = req(jd, "bus").get<std::string>();
            s.bus = f.bus_index(id);
            if (s.bus < 0) throw std::runtime_error("case: unknown DER bus " + id);
            f.buses[s.bus].der_candidate = true;
            if (jd.contains("cap_kw")) {
                s.cap_kw = jd["cap_kw"].get<double>();
                if (s.cap_kw <= 0) throw std::runtime_error("case: nonpositive DER site cap at " + id);
            } else {
                s.cap_kw = 0.0;  // resolved below once loads are known
            }
            c.der_sites.push_back(s);
        }
    }
    for (DerSite& s : c.der_sites) {
        if (s.cap_kw == 0.0) {
            s.cap_kw = 2.0 * c.peak_bus_demand(s.bus);
            c.provenance.push_back("default: DER site cap at " + f.buses[s.bus].id + " = 2x peak = " +
                                   std::to_string(s.cap_kw) + " kW");
        }
        if (s.cap_kw <= 0.0)
            throw std::runtime_error("case: DER site cap must be positive at " + f.buses[s.bus].id);
        if (ts.production[s.bus].empty())
            throw std::runtime_error("case: missing production factor for DER bus " +
                                     f.buses[s.bus].id);
    }
    if (j.contains("bess")) {
        const json& jb = j["bess"];
        for (const json& jsite : req(jb, "sites")) {
            BessSite s;
            const std::string id = req(jsite, "bus").get<std::string>();
            s.bus = f.bus_index(id);
            if (s.bus < 0) throw std::runtime_error("case: unknown BESS bus " + id);
            s.max_kw_per_phase = jsite.value("max_kw_per_phase", jb.value("max_kw_per_phase", 2000.0));
            s.max_kwh_per_phase =
                jsite.value("max_kwh_per_phase", jb.value("max_kwh_per_phase", 12000.0));
            f.buses[s.bus].bess_candidate = true;
            c.bess_sites.push_back(s);
        }
    }

    if (j.contains("price_cap")) {
        c.price_cap = j["price_cap"].get<double>();
    } else {
        c.price_cap = ie.import_price;
        c.provenance.push_back("default: price signal cap = investor import price");
    }

    c.hash = h;
    return c;
}

void write_case(const CaseFile& c, const std::string& dir) {
    const Feeder& f = c.feeder;
    const TimeSeriesSet& ts = c.series;
    json j;
    j["name"] = c.name;
    j["base_kv"] = f.base_kv;
    j["base_kva"] = f.base_kva;
    j["voltage_bounds_pu2"] = {{"min", f.vmin_pu2}, {"max", f.vmax_pu2}};
    j["substation"] = f.buses[f.substation].id;
    j["horizon"] = {{"steps", ts.steps},
                    {"step_hours", ts.step_hours},
                    {"annual_scale", ts.annual_scale},
                    {"load_power_factor", ts.load_power_factor}};
    json buses = json::array();
    for (const Bus& b : f.buses) {
        json jb{{"id", b.id}, {"phases", phases_to_string(b.phases)}};
        if (b.transformer) {
            jb["transformer"] = {{"rating_kw_per_phase", b.transformer->rating_kw_per_phase},
                                 {"upgrade_kw_per_phase", b.transformer->upgrade_kw_per_phase},
                                 {"cost_usd", b.transformer->cost_usd}};
        }
        buses.push_back(jb);
    }
    j["buses"] = buses;
    json lines = json::array();
    for (const Line& l : f.lines) {
        json jl{{"from", f.buses[l.from].id},
                {"to", f.buses[l.to].id},
                {"phases", phases_to_string(l.phases)},
                {"length_ft", l.length_ft},
                {"rating_kw_per_phase", l.rating_kw_per_phase}};
        json zm = json::array();
        for (int r = 0; r < 3; ++r) {
            json row = json::array();
            for (int cc = 0; cc < 3; ++cc)
                row.push_back({l.z_ohm[r][cc].real(), l.z_ohm[r][cc].imag()});
            zm.push_back(row);
        }
        jl["z_matrix_ohm"] = zm;
        if (l.upgrade) {
            jl["upgrade"] = {{"delta_kw_per_phase", l.upgrade->delta_kw_per_phase},
                             {"cost_usd", l.upgrade->cost_usd}};
        }
        lines.push_back(jl);
    }
    j["lines"] = lines;
    j["series"] = {{"loads_csv", "loads.csv"},
                   {"lmp_csv", "lmp.csv"},
                   {"production_csv", "production.csv"}};
    j["demand_periods"] = {{"period_of_step", ts.period_of_step},
                           {"price_usd_per_kw", ts.demand_price}};
    j["economics"] = {
        {"planner",
         {{"r_e", c.econ.planner.r_e},
          {"r_c", c.econ.planner.r_c},
          {"r_wacc", c.econ.planner.r_wacc},
          {"n_years", c.econ.planner.n_years},
          {"bess_kw_cost", c.econ.planner.bess_kw_cost},
          {"bess_kwh_cost", c.econ.planner.bess_kwh_cost},
          {"bess_efficiency", c.econ.planner.bess_efficiency}}},
        {"investor",
         {{"r_e", c.econ.investor.r_e},
          {"r_c", c.econ.investor.r_c},
          {"ror", c.econ.investor.ror},
          {"der_kw_cost", c.econ.investor.der_kw_cost},
          {"om_cost_per_kw_year", c.econ.investor.om_cost_per_kw_year},
          {"import_price", c.econ.investor.import_price}}}};
    json der = json::array();
    for (const DerSite& s : c.der_sites)
        der.push_back({{"bus", f.buses[s.bus].id}, {"cap_kw", s.cap_kw}});
    j["der"] = {{"sites", der}};
    json bess = json::array();
    for (const BessSite& s : c.bess_sites)
        bess.push_back({{"bus", f.buses[s.bus].id},
                        {"max_kw_per_phase", s.max_kw_per_phase},
                        {"max_kwh_per_phase", s.max_kwh_per_phase}});
    j["bess"] = {{"sites", bess}};
    j["price_cap"] = c.price_cap;

    auto write = [&](const std::string& rel, const std::string& body) {
        std::ofstream out(dir + "/" + rel, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + dir + "/" + rel);
        out << body;
    };

    const int T = ts.steps;
    std::string loads = "bus,phase";
    for (int t = 0; t < T; ++t) loads += ",t" + std::to_string(t);
    loads += "\n";
    for (const Bus& b : f.buses) {
        for (int ph = 0; ph < 3; ++ph) {
            const auto& s = ts.loads[b.index][ph];
            if (s.empty()) continue;
            loads += b.id;
            loads += ",";
            loads += phase_name(ph);
            for (int t = 0; t < T; ++t) loads += "," + format_number(s[t]);
            loads += "\n";
        }
    }
    write("loads.csv", loads);

    std::string lmp = "series";
    for (int t = 0; t < T; ++t) lmp += ",t" + std::to_string(t);
    lmp += "\nlmp";
    for (int t = 0; t < T; ++t) lmp += "," + format_number(ts.lmp[t]);
    lmp += "\n";
    write("lmp.csv", lmp);

    std::string prod = "bus";
    for (int t = 0; t < T; ++t) prod += ",t" + std::to_string(t);
    prod += "\n";
    for (const Bus& b : f.buses) {
        if (ts.production[b.index].empty()) continue;
        prod += b.id;
        for (int t = 0; t < T; ++t) prod += "," + format_number(ts.production[b.index][t]);
        prod += "\n";
    }
    write("production.csv", prod);

    write(c.name + ".json", j.dump(2) + "\n");
}

}  // namespace nwa
