#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nwa/network.hpp"
#include "nwa/synth_case.hpp"

using namespace nwa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nwa_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string case_path(const TempDir& d, const CaseFile& c) {
    write_case(c, d.path.string());
    return (d.path / (c.name + ".json")).string();
}

}  // namespace

TEST_CASE("bundled case loads with the advertised candidates") {
    TempDir dir;
    CaseFile synth = make_ieee13_synth();
    CaseFile c = load_case(case_path(dir, synth));
    CHECK(c.feeder.buses.size() == 13);
    REQUIRE(c.der_sites.size() == 3);
    auto id = [&](int bus) { return c.feeder.buses[bus].id; };
    CHECK(id(c.der_sites[0].bus) == "634");
    CHECK(id(c.der_sites[1].bus) == "646");
    CHECK(id(c.der_sites[2].bus) == "675");
    REQUIRE(c.bess_sites.size() == 2);
    CHECK(id(c.bess_sites[0].bus) == "632");
    CHECK(id(c.bess_sites[1].bus) == "634");
    CHECK(c.series.steps == 168);
}

TEST_CASE("load_case is deterministic") {
    TempDir dir;
    std::string path = case_path(dir, make_ieee13_synth());
    CaseFile a = load_case(path);
    CaseFile b = load_case(path);
    CHECK(a.hash == b.hash);
    CHECK(a.series.lmp == b.series.lmp);
    CHECK(a.feeder.lines.size() == b.feeder.lines.size());
}

TEST_CASE("cycle is rejected") {
    TempDir dir;
    CaseFile synth = make_ieee13_synth();
    std::string path = case_path(dir, synth);
    // Append a duplicate edge 632-633 to close a cycle 632-633-634-… no:
    // a parallel edge already forms a cycle.
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto pos = text.find("\"lines\": [");
    REQUIRE(pos != std::string::npos);
    std::string extra =
        "\"lines\": [\n  {\"from\":\"632\",\"to\":\"634\",\"phases\":\"abc\",\"length_ft\":10,"
        "\"rating_kw_per_phase\":100,\"impedance_ohm_per_1000ft\":{\"self_r\":0.1,\"self_x\":0.2}},";
    text.replace(pos, std::string("\"lines\": [").size(), extra);
    std::ofstream out(path);
    out << text;
    out.close();
    CHECK_THROWS_WITH_AS(load_case(path), doctest::Contains("cycle"), std::runtime_error);
}

TEST_CASE("validate_radial reports disconnection and cycles") {
    CaseFile c = make_ieee13_synth();
    {
        Feeder f = c.feeder;
        f.lines.pop_back();  // 692-675 gone: 675 disconnected
        RadialCheck rc = validate_radial(f);
        CHECK_FALSE(rc.ok);
        CHECK(rc.detail.find("disconnected") != std::string::npos);
        CHECK(rc.detail.find("675") != std::string::npos);
    }
    {
        Feeder f = c.feeder;
        Line extra = f.lines[1];  // parallel 632-633
        extra.index = static_cast<int>(f.lines.size());
        f.lines.push_back(extra);
        RadialCheck rc = validate_radial(f);
        CHECK_FALSE(rc.ok);
        CHECK(rc.detail.find("cycle") != std::string::npos);
    }
    CHECK(validate_radial(c.feeder).ok);
}

TEST_CASE("series length mismatch is rejected") {
    TempDir dir;
    CaseFile synth = make_two_bus_case(0.01, 0.02, 100.0, 24);
    std::string path = case_path(dir, synth);
    // Truncate one row of loads.csv to 23 values.
    fs::path loads = dir.path / "loads.csv";
    std::ifstream in(loads);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    in.close();
    row = row.substr(0, row.rfind(','));
    std::ofstream out(loads);
    out << header << "\n" << row << "\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_case(path), doctest::Contains("length"), std::runtime_error);
}

TEST_CASE("unknown bus reference is rejected") {
    TempDir dir;
    CaseFile synth = make_two_bus_case(0.01, 0.02, 100.0, 4);
    std::string path = case_path(dir, synth);
    fs::path loads = dir.path / "loads.csv";
    std::ofstream out(loads, std::ios::app);
    out << "ghost,a,1,1,1,1\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_case(path), doctest::Contains("unknown bus"), std::runtime_error);
}

TEST_CASE("overload arithmetic") {
    // Rating 500 total / peak 715 -> 143%; rating 100 / peak 90 -> not flagged.
    CaseFile c = make_two_bus_case(0.01, 0.02, 715.0, 4);
    c.feeder.buses[1].transformer = TransformerSpec{500.0, 300.0, 1000.0};
    auto entries = overload_report(c);
    REQUIRE(entries.size() >= 2);
    const OverloadEntry* trfx = nullptr;
    for (const auto& e : entries)
        if (e.component == "trfx:b1") trfx = &e;
    REQUIRE(trfx != nullptr);
    CHECK(trfx->percent == doctest::Approx(143.0).epsilon(1e-9));
    CHECK(trfx->overloaded);

    CaseFile c2 = make_two_bus_case(0.01, 0.02, 90.0, 4);
    c2.feeder.buses[1].transformer = TransformerSpec{100.0, 50.0, 1000.0};
    auto entries2 = overload_report(c2);
    const OverloadEntry* t2 = nullptr;
    for (const auto& e : entries2)
        if (e.component == "trfx:b1") t2 = &e;
    REQUIRE(t2 != nullptr);
    CHECK(t2->percent == doctest::Approx(90.0));
    CHECK_FALSE(t2->overloaded);
}

TEST_CASE("bundled case flags exactly 3 transformers and 4 line groups") {
    CaseFile c = make_ieee13_synth();
    auto entries = overload_report(c);
    int trfx = 0, lines = 0;
    for (const auto& e : entries) {
        if (!e.overloaded) continue;
        if (e.component.rfind("trfx:", 0) == 0) ++trfx;
        else ++lines;
    }
    CHECK(trfx == 3);
    CHECK(lines == 4);
    // Fig-2 loadings on the three secondary transformers.
    for (const auto& e : entries) {
        if (e.component == "trfx:634") CHECK(e.percent == doctest::Approx(143.0).epsilon(1e-6));
        if (e.component == "trfx:646") CHECK(e.percent == doctest::Approx(111.0).epsilon(1e-6));
        if (e.component == "trfx:675") CHECK(e.percent == doctest::Approx(167.0).epsilon(1e-6));
    }
}

TEST_CASE("line upgrade cost rule resolves at load time") {
    TempDir dir;
    CaseFile synth = make_ieee13_synth();
    // Strip the stored cost on one upgrade to exercise the rule.
    std::string path = case_path(dir, synth);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto pos = text.find("\"cost_usd\": 115000.0");
    if (pos == std::string::npos) pos = text.find("\"cost_usd\": 115000");
    REQUIRE(pos != std::string::npos);
    // 632-633 is 500 ft: rule gives 500*200+15000 = 115000. Remove the field:
    auto comma = text.find(',', pos);
    text.erase(pos, comma - pos + 1);
    std::ofstream out(path);
    out << text;
    out.close();
    CaseFile c = load_case(path);
    const Line* l = nullptr;
    for (const Line& ln : c.feeder.lines)
        if (ln.name == "632-633") l = &ln;
    REQUIRE(l != nullptr);
    REQUIRE(l->upgrade.has_value());
    CHECK(l->upgrade->cost_usd == doctest::Approx(500.0 * 200.0 + 15000.0));
}

TEST_CASE("non-finite and schema violations") {
    TempDir dir;
    fs::path p = dir.path / "bad.json";
    std::ofstream out(p);
    out << "{\"name\": \"bad\"}";
    out.close();
    CHECK_THROWS_WITH_AS(load_case(p.string()), doctest::Contains("missing field"),
                         std::runtime_error);
    CHECK_THROWS(load_case((dir.path / "absent.json").string()));
}
