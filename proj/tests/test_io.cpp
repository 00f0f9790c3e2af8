#include "gridform/config.hpp"
#include "gridform/output.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gridform;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream o;
    o << f.rdbuf();
    return o.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("gridform_test_io_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("empty config gives the default case") {
    const auto p = parse_config("");
    const CaseParams d;
    CHECK(list_parameters(p) == list_parameters(d));
    CHECK(p.network.s_n == 1e6);
    CHECK(p.grid.scr == 3.0);
}

TEST_CASE("config sections and keys") {
    const auto p = parse_config("vsc.mp = 0.02\n[grid]\nscr = 6\n[scenario.fault_3ph]\nduration = 0.1\n");
    CHECK(p.vsc.m_p == 0.02);
    CHECK(converter::equivalent_inertia(p.vsc.m_p, p.vsc.omega_c) == doctest::Approx(10.0));
    CHECK(p.grid.scr == 6.0);
    CHECK(p.scenario.fault_duration == 0.1);
}

TEST_CASE("config errors") {
    auto message = [](std::string_view text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("[grid]\nscr = 0\n").find("scr must be > 0") != std::string::npos);
    CHECK(message("[grid]\nno_such = 1\n").find("grid.no_such") != std::string::npos);
    CHECK(message("[grid]\nscr = abc\n").find("grid.scr") != std::string::npos);
    CHECK(message("[grid]\nscr = 3\n[broken\n").find("line 3") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/case.ini"), ConfigError);
}

TEST_CASE("empty trace writes the header only") {
    TraceSet tr;
    CHECK(output::format_csv(tr) == "t,P_pcc,Q_pcc,f_dev,f_grid,Vmag_pcc,Vmag_lv,Imag_pcc,Vdc,delta\n");
}

TEST_CASE("numbers round-trip through the CSV") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 50.00000000000001, 1e300}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("emitted traces") {
    const auto dir = scratch_dir("traces");
    auto s = build_scenario(ScenarioKind::Fault3ph, Device::Vsc);
    auto emit = [&](const std::string& name) {
        auto state = init_system(s);
        const auto prov = output::provenance(s, state.system.tvi_gain());
        const auto tr = run(s, std::move(state));
        output::emit_csv(tr, (dir / name).string(), prov);
        return tr;
    };
    const auto tr = emit("a.csv");
    emit("b.csv");
    const auto a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a.find('\r') == std::string::npos);
    CHECK(a.rfind("# gridform ", 0) == 0);
    CHECK(a.find("# scenario = fault_3ph\n") != std::string::npos);
    CHECK(a.find("# vsc.mp = ") != std::string::npos);

    // read the artifact back: column order, row count, empty delta, current limit
    std::istringstream in(a);
    std::string line;
    while (std::getline(in, line) && line.front() == '#') {}
    CHECK(line == "t,P_pcc,Q_pcc,f_dev,f_grid,Vmag_pcc,Vmag_lv,Imag_pcc,Vdc,delta");
    std::size_t rows = 0;
    double i_peak = 0.0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        if (line.back() == ',') cells.emplace_back();
        REQUIRE(cells.size() == 10);
        CHECK(cells[9].empty());
        CHECK_FALSE(cells[8].empty());
        i_peak = std::max(i_peak, std::stod(cells[7]));
        ++rows;
    }
    CHECK(rows == tr.size());
    CHECK(i_peak <= 1.1 * 1.02);
}

TEST_CASE("plot data and summary rows") {
    const auto dir = scratch_dir("plot");
    TraceSet tr;
    tr.device = Device::Sc;
    tr.t = {0.0, 0.5};
    tr.channels["P_pcc"] = {0.25, -0.125};
    output::emit_plot_data(tr, dir.string(), "x", "# head\n");
    CHECK(slurp(dir / "x_P_pcc.dat") == "# head\n# t P_pcc\n0 0.25\n0.5 -0.125\n");

    metrics::MetricReport r;
    r.scenario = "load_step";
    const auto summary = (dir / "summary.csv").string();
    output::append_summary_row(summary, r);
    output::append_summary_row(summary, r);
    const auto text = slurp(summary);
    CHECK(text == output::summary_header() + "\n" + output::summary_row(r) + "\n" + output::summary_row(r) + "\n");
}
