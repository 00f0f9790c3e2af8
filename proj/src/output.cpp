#include "gridform/output.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gridform::output {

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

const char* tool_version() { return GRIDFORM_VERSION; }

std::string provenance(const Scenario& s, double tvi_gain) {
    std::ostringstream o;
    o << "# gridform " << tool_version() << '\n';
    o << "# scenario = " << s.name() << '\n';
    o << "# device = " << to_string(s.device) << '\n';
    const double h = s.device == Device::Sc ? s.params.sc.h
                                            : converter::equivalent_inertia(s.params.vsc.m_p, s.params.vsc.omega_c);
    o << "# h_equivalent = " << format_double(h) << '\n';
    o << "# horizon = " << format_double(s.horizon) << '\n';
    for (const auto& e : s.events) {
        o << "# event = " << format_double(e.time) << ' ' << network::to_string(e.kind) << ' '
          << format_double(e.value) << '\n';
    }
    if (s.device == Device::Vsc) o << "# vsc.tvi.k_v.resolved = " << format_double(tvi_gain) << '\n';
    for (const auto& [k, v] : list_parameters(s.params)) o << "# " << k << " = " << v << '\n';
    return o.str();
}

std::string format_csv(const TraceSet& tr, const std::string& provenance_block) {
    std::ostringstream o;
    o << provenance_block;
    for (std::size_t c = 0; c < kChannelOrder.size(); ++c) o << (c ? "," : "") << kChannelOrder[c];
    o << '\n';
    std::vector<const std::vector<double>*> cols;
    for (std::size_t c = 1; c < kChannelOrder.size(); ++c) {
        auto it = tr.channels.find(kChannelOrder[c]);
        cols.push_back(it == tr.channels.end() ? nullptr : &it->second);
    }
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        o << format_double(tr.t[i]);
        for (const auto* col : cols) {
            o << ',';
            if (col) o << cell((*col)[i]);
        }
        o << '\n';
    }
    return o.str();
}

void write_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << content;
    f.close();
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void emit_csv(const TraceSet& tr, const std::string& path, const std::string& provenance_block) {
    write_file(path, format_csv(tr, provenance_block));
}

void emit_plot_data(const TraceSet& tr, const std::string& dir, const std::string& stem,
                    const std::string& provenance_block) {
    for (const auto& [name, values] : tr.channels) {
        std::ostringstream o;
        o << provenance_block << "# t " << name << '\n';
        for (std::size_t i = 0; i < tr.t.size(); ++i) o << format_double(tr.t[i]) << ' ' << cell(values[i]) << '\n';
        write_file((std::filesystem::path(dir) / (stem + "_" + name + ".dat")).string(), o.str());
    }
}

std::string summary_header() {
    return "scenario,device,h_equivalent,p_initial,rocof_50ms,rocof_200ms,rocof_500ms,freq_extreme,"
           "freq_extreme_time,freq_final_deviation,first_cycle_dip,q_convergence_time,current_peak,"
           "fault_current_at_100ms,fault_current_at_150ms,v_lv_during_event,resync_time,damping_settle_time";
}

std::string summary_row(const metrics::MetricReport& r) {
    std::ostringstream o;
    o << r.scenario << ',' << to_string(r.device);
    for (double v : {r.h_equivalent, r.p_initial, r.rocof_50ms, r.rocof_200ms, r.rocof_500ms, r.freq_extreme,
                     r.freq_extreme_time, r.freq_final_deviation, r.first_cycle_dip, r.q_convergence_time,
                     r.current_peak, r.fault_current_at_100ms, r.fault_current_at_150ms, r.v_lv_during_event,
                     r.resync_time, r.damping_settle_time}) {
        o << ',' << format_double(v);
    }
    return o.str();
}

void append_summary_row(const std::string& path, const metrics::MetricReport& r) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    std::ofstream f(path, std::ios::binary | std::ios::app);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for appending");
    if (fresh) f << summary_header() << '\n';
    f << summary_row(r) << '\n';
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace gridform::output
