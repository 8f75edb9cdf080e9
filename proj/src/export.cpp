#include "mgrid/export.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mgrid::scenario {

namespace fs = std::filesystem;

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

void finish(std::ofstream& f, const fs::path& p) {
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

void export_csv(const RunOutput& out, const Metrics& m, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
    const fs::path base(dir);

    {
        const fs::path p = base / "timeseries.csv";
        auto f = open_out(p);
        f << "t,dg,v_od,v_oq,P,Q,omega,V_n,xi,f_hat,z0_hat,z1_hat\n";
        for (const SeriesRow& r : out.series) {
            f << fmt9(r.t) << ',' << r.dg + 1 << ',' << fmt9(r.v_od) << ',' << fmt9(r.v_oq) << ',' << fmt9(r.p) << ','
              << fmt9(r.q) << ',' << fmt9(r.omega) << ',' << fmt9(r.v_n) << ',' << fmt9(r.xi) << ','
              << fmt9(r.f_hat) << ',' << fmt9(r.z0_hat) << ',' << fmt9(r.z1_hat) << '\n';
        }
        finish(f, p);
    }
    {
        const fs::path p = base / "triggers.csv";
        auto f = open_out(p);
        f << "step,dg,opt_fired,com_fired,reason\n";
        for (const auto& r : out.triggers) {
            f << r.step << ',' << r.dg + 1 << ',' << (r.opt_fired ? 1 : 0) << ',' << (r.com_fired ? 1 : 0) << ','
              << trigger::reason_name(r.reason) << '\n';
        }
        finish(f, p);
    }
    {
        const fs::path p = base / "delivery.csv";
        auto f = open_out(p);
        f << "step,edge,delivered\n";
        for (const auto& r : out.deliveries) {
            f << r.step << ',' << r.from + 1 << "->" << r.to + 1 << ',' << (r.delivered ? 1 : 0) << '\n';
        }
        finish(f, p);
    }
    {
        const fs::path p = base / "observer.csv";
        auto f = open_out(p);
        f << "t,dg,f_hat,z0_hat,z1_hat,cond_gamma,flagged\n";
        for (const auto& r : out.observer) {
            f << fmt9(r.t) << ',' << r.dg + 1 << ',' << fmt9(r.est.f_hat) << ',' << fmt9(r.est.z0_hat) << ','
              << fmt9(r.est.z1_hat) << ',' << fmt9(r.est.cond_gamma) << ',' << (r.est.flagged ? 1 : 0) << '\n';
        }
        finish(f, p);
    }
    {
        const fs::path p = base / "metrics.json";
        auto f = open_out(p);
        f << metrics_json(out, m).dump(2) << '\n';
        finish(f, p);
    }
}

}  // namespace mgrid::scenario
