#include "mgrid/scenario.hpp"

#include "mgrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

namespace mgrid::scenario {

using nlohmann::json;

namespace {

int ratio_of(double big, double small, const char* what) {
    const double q = big / small;
    const long n = std::lround(q);
    if (n < 1 || std::abs(q - static_cast<double>(n)) > 1e-6) {
        throw ScenarioError(std::string(what) + " must be an integer multiple");
    }
    return static_cast<int>(n);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ScenarioError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) throw ScenarioError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ScenarioError("key '" + key + "' in " + where + " has the wrong type");
    }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ScenarioError("missing key '" + key + "' in " + where);
    return get_or<T>(obj, key, T{}, where);
}

EventKind parse_kind(const std::string& s) {
    static const std::map<std::string, EventKind> kinds = {
        {"load_connect", EventKind::LoadConnect},   {"load_disconnect", EventKind::LoadDisconnect},
        {"dg_unplug", EventKind::DgUnplug},         {"dg_plug", EventKind::DgPlug},
        {"link_down", EventKind::LinkDown},         {"link_up", EventKind::LinkUp},
        {"breaker_open", EventKind::BreakerOpen},   {"breaker_close", EventKind::BreakerClose},
        {"secondary_on", EventKind::SecondaryOn},
    };
    auto it = kinds.find(s);
    if (it == kinds.end()) throw ScenarioError("unknown event kind '" + s + "'");
    return it->second;
}

template <typename Named>
int find_named(const std::vector<Named>& items, const std::string& name, const char* what) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].name == name) return static_cast<int>(i);
    }
    throw ScenarioError(std::string("unknown ") + what + " '" + name + "'");
}

int find_bus(const std::vector<std::string>& buses, const std::string& name) {
    auto it = std::find(buses.begin(), buses.end(), name);
    if (it == buses.end()) throw ScenarioError("unknown bus '" + name + "'");
    return static_cast<int>(it - buses.begin());
}

physics::DGParams parse_dg_params(const json& j, const std::string& where) {
    physics::DGParams p = dg_preset(get_or<std::string>(j, "preset", "dg1", where));
    p.m_p = get_or(j, "m_P", p.m_p, where);
    p.n_q = get_or(j, "n_Q", p.n_q, where);
    p.r_f = get_or(j, "R_f", p.r_f, where);
    p.l_f = get_or(j, "L_f", p.l_f, where);
    p.c_f = get_or(j, "C_f", p.c_f, where);
    p.r_c = get_or(j, "R_c", p.r_c, where);
    p.l_c = get_or(j, "L_c", p.l_c, where);
    p.k_pv = get_or(j, "K_Pv", p.k_pv, where);
    p.k_iv = get_or(j, "K_Iv", p.k_iv, where);
    p.k_pc = get_or(j, "K_Pc", p.k_pc, where);
    p.k_ic = get_or(j, "K_Ic", p.k_ic, where);
    p.omega_c = get_or(j, "omega_c", p.omega_c, where);
    p.f_frame = get_or(j, "F", p.f_frame, where);
    p.omega_b = get_or(j, "omega_b", p.omega_b, where);
    return p;
}

}  // namespace

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Etdmpc: return "etdmpc";
        case Mode::TimeTriggered: return "time_triggered_dmpc";
        case Mode::Pi: return "pi_baseline";
    }
    return "etdmpc";
}

Mode parse_mode(const std::string& s) {
    if (s == "etdmpc") return Mode::Etdmpc;
    if (s == "time_triggered_dmpc" || s == "time-triggered") return Mode::TimeTriggered;
    if (s == "pi_baseline" || s == "pi") return Mode::Pi;
    throw ScenarioError("unknown controller mode '" + s + "'");
}

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::LoadConnect: return "load_connect";
        case EventKind::LoadDisconnect: return "load_disconnect";
        case EventKind::DgUnplug: return "dg_unplug";
        case EventKind::DgPlug: return "dg_plug";
        case EventKind::LinkDown: return "link_down";
        case EventKind::LinkUp: return "link_up";
        case EventKind::BreakerOpen: return "breaker_open";
        case EventKind::BreakerClose: return "breaker_close";
        case EventKind::SecondaryOn: return "secondary_on";
    }
    return "?";
}

physics::DGParams dg_preset(const std::string& name) {
    if (name == "dg1") return physics::dg1_params();
    if (name == "dg2") return physics::dg2_params();
    if (name == "dg3" || name == "dg4") return physics::dg34_params();
    throw ScenarioError("unknown DG preset '" + name + "'");
}

int Scenario::steps_total() const { return static_cast<int>(std::lround(duration / dt)); }
int Scenario::steps_per_sample() const { return ratio_of(t_s, dt, "T_s / dt"); }
int Scenario::steps_per_mpc() const { return ratio_of(t_s_mpc, dt, "T_s_mpc / dt"); }

comm::CommGraph Scenario::graph() const {
    try {
        return comm::CommGraph::undirected(n_dgs(), comm_links, pinned);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("comm: ") + e.what());
    }
}

comm::LinkSchedule Scenario::link_schedule() const {
    std::map<std::pair<int, int>, std::vector<comm::DownInterval>> down;
    std::map<std::pair<int, int>, double> open_since;
    const double forever = std::numeric_limits<double>::infinity();
    for (const Event& e : events) {
        if (e.kind != EventKind::LinkDown && e.kind != EventKind::LinkUp) continue;
        std::vector<std::pair<int, int>> dirs{{e.link_from, e.link_to}};
        if (e.bidirectional) dirs.emplace_back(e.link_to, e.link_from);
        for (const auto& d : dirs) {
            if (e.kind == EventKind::LinkDown) {
                if (!open_since.count(d)) open_since[d] = e.t;
            } else if (open_since.count(d)) {
                if (e.t > open_since[d]) down[d].push_back({open_since[d], e.t});
                open_since.erase(d);
            }
        }
    }
    for (const auto& [d, t0] : open_since) down[d].push_back({t0, forever});
    std::vector<comm::EdgeSchedule> edges;
    for (const auto& [d, iv] : down) edges.push_back({d.first, d.second, iv});
    return comm::LinkSchedule(edges);
}

std::optional<double> Scenario::secondary_on_time() const {
    for (const Event& e : events) {
        if (e.kind == EventKind::SecondaryOn) return e.t;
    }
    return std::nullopt;
}

void Scenario::validate() const {
    if (!(duration >= 0.0)) throw ScenarioError("duration must be non-negative");
    if (!(dt > 0.0) || dt > 1e-4) throw ScenarioError("dt must lie in (0, 1e-4]");
    if (!(t_s >= dt)) throw ScenarioError("T_s must be at least dt");
    steps_per_sample();
    steps_per_mpc();
    ratio_of(t_s_mpc, t_s, "T_s_mpc / T_s");
    if (horizon < 1) throw ScenarioError("horizon must be >= 1");
    if (!(v_ref > 0.0)) throw ScenarioError("v_ref must be positive");
    if (!(thresholds.e_opt >= 0.0) || !(thresholds.e_com >= 0.0)) throw ScenarioError("thresholds must be >= 0");
    if (!(rho > 0.0)) throw ScenarioError("qp.rho must be positive");
    if (!(v_lo_pu < v_hi_pu)) throw ScenarioError("qp bounds need v_lo < v_hi");
    if (!(slack_penalty > 0.0)) throw ScenarioError("qp.slack_weight must be positive");
    if (!(noise_sigma >= 0.0)) throw ScenarioError("noise_sigma must be >= 0");
    if (!(gain_error > -1.0)) throw ScenarioError("gain_error must exceed -1");
    if (com_refresh < 0) throw ScenarioError("com_refresh must be >= 0");
    if (!(ancillary_bandwidth >= 0.0)) throw ScenarioError("ancillary_bandwidth must be >= 0");
    if (window.length() > t_s_mpc + 1e-12) throw ScenarioError("observer t_eps + dt_active must not exceed T_s_mpc");
    if (!(window.dt_active > 0.0) || window.t_eps < 0.0) throw ScenarioError("observer window lengths must be positive");
    try {
        kernels.validate();
        network.validate();
        for (const auto& d : dgs) d.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    if (dgs.empty()) throw ScenarioError("at least one DG is required");
    graph();

    int secondary = 0;
    double last_t = -std::numeric_limits<double>::infinity();
    for (const Event& e : events) {
        if (e.t < last_t) throw ScenarioError("events must be sorted by time");
        last_t = e.t;
        if (e.t < 0.0 || e.t > duration) throw ScenarioError("event at t=" + std::to_string(e.t) + " lies outside the run");
        if (e.kind == EventKind::SecondaryOn) ++secondary;
        if (e.kind == EventKind::DgUnplug && e.index == 0) {
            throw ScenarioError("the reference DG " + dgs[0].name + " cannot be unplugged");
        }
    }
    if (secondary > 1) throw ScenarioError("secondary_on may appear at most once");
    link_schedule();
}

Scenario parse_scenario(const json& j) {
    const std::string top = "scenario";
    check_keys(j, {"name", "description", "duration", "dt", "T_s", "T_s_mpc", "horizon", "v_ref", "mode", "thresholds",
                   "qp", "observer", "linearization", "reoptimize_on_receive", "com_refresh", "gain_error",
                   "ancillary_bandwidth", "noise_sigma", "seed", "pi", "parallel", "network", "dgs", "comm", "events"},
               top);
    Scenario s;
    s.name = get_or<std::string>(j, "name", "scenario", top);
    s.duration = require<double>(j, "duration", top);
    s.dt = get_or(j, "dt", s.dt, top);
    s.t_s = get_or(j, "T_s", s.t_s, top);
    s.t_s_mpc = get_or(j, "T_s_mpc", s.t_s_mpc, top);
    s.horizon = get_or(j, "horizon", s.horizon, top);
    s.v_ref = get_or(j, "v_ref", s.v_ref, top);
    s.mode = parse_mode(get_or<std::string>(j, "mode", "etdmpc", top));

    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        check_keys(t, {"e_opt", "e_com", "units"}, "thresholds");
        s.thresholds.e_opt = get_or(t, "e_opt", s.thresholds.e_opt, "thresholds");
        s.thresholds.e_com = get_or(t, "e_com", s.thresholds.e_com, "thresholds");
        const std::string units = get_or<std::string>(t, "units", "volt", "thresholds");
        if (units != "volt" && units != "pu") throw ScenarioError("thresholds.units must be 'volt' or 'pu'");
        s.thresholds_pu = units == "pu";
    }
    if (j.contains("qp")) {
        const json& q = j.at("qp");
        check_keys(q, {"rho", "v_lo_pu", "v_hi_pu", "slack_weight"}, "qp");
        s.rho = get_or(q, "rho", s.rho, "qp");
        s.v_lo_pu = get_or(q, "v_lo_pu", s.v_lo_pu, "qp");
        s.v_hi_pu = get_or(q, "v_hi_pu", s.v_hi_pu, "qp");
        s.slack_penalty = get_or(q, "slack_weight", s.slack_penalty, "qp");
    }
    if (j.contains("observer")) {
        const json& o = j.at("observer");
        check_keys(o, {"varpi", "omega", "t_eps", "dt_active"}, "observer");
        s.kernels.varpi = get_or(o, "varpi", s.kernels.varpi, "observer");
        if (o.contains("omega")) {
            const auto w = get_or<std::vector<double>>(o, "omega", {}, "observer");
            if (w.size() != 3) throw ScenarioError("observer.omega needs exactly three decay rates");
            std::copy(w.begin(), w.end(), s.kernels.omega.begin());
        }
        s.window.t_eps = get_or(o, "t_eps", s.window.t_eps, "observer");
        s.window.dt_active = get_or(o, "dt_active", s.window.dt_active, "observer");
    }
    const std::string lin = get_or<std::string>(j, "linearization", "continuous", top);
    if (lin == "continuous") {
        s.linearization = Linearization::Continuous;
    } else if (lin == "sampled") {
        s.linearization = Linearization::Sampled;
    } else {
        throw ScenarioError("linearization must be 'continuous' or 'sampled'");
    }
    s.reoptimize_on_receive = get_or(j, "reoptimize_on_receive", s.reoptimize_on_receive, top);
    s.com_refresh = get_or(j, "com_refresh", s.com_refresh, top);
    s.gain_error = get_or(j, "gain_error", s.gain_error, top);
    s.ancillary_bandwidth = get_or(j, "ancillary_bandwidth", s.ancillary_bandwidth, top);
    s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma, top);
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed, top);
    s.parallel = get_or(j, "parallel", s.parallel, top);
    if (j.contains("pi")) {
        const json& p = j.at("pi");
        check_keys(p, {"k_p", "k_i"}, "pi");
        s.pi.k_p = get_or(p, "k_p", s.pi.k_p, "pi");
        s.pi.k_i = get_or(p, "k_i", s.pi.k_i, "pi");
    }

    if (!j.contains("network")) throw ScenarioError("missing key 'network' in scenario");
    const json& net = j.at("network");
    check_keys(net, {"closure", "R_n", "buses", "lines", "loads"}, "network");
    const std::string closure = get_or<std::string>(net, "closure", "kcl", "network");
    if (closure == "kcl") {
        s.network.closure = physics::Closure::Kcl;
    } else if (closure == "virtual_resistor") {
        s.network.closure = physics::Closure::VirtualResistor;
    } else {
        throw ScenarioError("network.closure must be 'kcl' or 'virtual_resistor'");
    }
    s.network.r_n = get_or(net, "R_n", s.network.r_n, "network");
    s.bus_names = require<std::vector<std::string>>(net, "buses", "network");
    s.network.n_buses = static_cast<int>(s.bus_names.size());
    if (net.contains("lines")) {
        for (const json& l : net.at("lines")) {
            check_keys(l, {"name", "from", "to", "R", "L", "closed"}, "network.lines");
            physics::Line ln;
            ln.name = get_or<std::string>(l, "name", "line" + std::to_string(s.network.lines.size() + 1), "network.lines");
            ln.from = find_bus(s.bus_names, require<std::string>(l, "from", "network.lines"));
            ln.to = find_bus(s.bus_names, require<std::string>(l, "to", "network.lines"));
            ln.r = require<double>(l, "R", "network.lines");
            ln.l = require<double>(l, "L", "network.lines");
            ln.closed = get_or(l, "closed", true, "network.lines");
            s.network.lines.push_back(ln);
        }
    }
    if (net.contains("loads")) {
        for (const json& l : net.at("loads")) {
            check_keys(l, {"name", "bus", "R", "L", "connected"}, "network.loads");
            physics::Load ld;
            ld.name = get_or<std::string>(l, "name", "load" + std::to_string(s.network.loads.size() + 1), "network.loads");
            ld.bus = find_bus(s.bus_names, require<std::string>(l, "bus", "network.loads"));
            ld.r = require<double>(l, "R", "network.loads");
            ld.l = require<double>(l, "L", "network.loads");
            ld.connected = get_or(l, "connected", true, "network.loads");
            s.network.loads.push_back(ld);
        }
    }

    if (!j.contains("dgs")) throw ScenarioError("missing key 'dgs' in scenario");
    for (const json& d : j.at("dgs")) {
        check_keys(d, {"name", "bus", "preset", "m_P", "n_Q", "R_f", "L_f", "C_f", "R_c", "L_c", "K_Pv", "K_Iv", "K_Pc",
                       "K_Ic", "omega_c", "F", "omega_b"},
                   "dgs");
        DGSpec spec;
        spec.name = get_or<std::string>(d, "name", "DG" + std::to_string(s.dgs.size() + 1), "dgs");
        spec.bus = find_bus(s.bus_names, require<std::string>(d, "bus", "dgs"));
        spec.params = parse_dg_params(d, "dgs");
        s.dgs.push_back(spec);
    }

    if (!j.contains("comm")) throw ScenarioError("missing key 'comm' in scenario");
    const json& c = j.at("comm");
    check_keys(c, {"links", "pinned"}, "comm");
    for (const auto& pair : require<std::vector<std::vector<std::string>>>(c, "links", "comm")) {
        if (pair.size() != 2) throw ScenarioError("comm.links entries must name two DGs");
        s.comm_links.emplace_back(find_named(s.dgs, pair[0], "DG"), find_named(s.dgs, pair[1], "DG"));
    }
    for (const auto& p : require<std::vector<std::string>>(c, "pinned", "comm")) s.pinned.push_back(find_named(s.dgs, p, "DG"));

    if (j.contains("events")) {
        for (const json& e : j.at("events")) {
            check_keys(e, {"t", "kind", "target"}, "events");
            Event ev;
            ev.t = require<double>(e, "t", "events");
            ev.kind = parse_kind(require<std::string>(e, "kind", "events"));
            ev.target = get_or<std::string>(e, "target", "", "events");
            switch (ev.kind) {
                case EventKind::LoadConnect:
                case EventKind::LoadDisconnect: ev.index = find_named(s.network.loads, ev.target, "load"); break;
                case EventKind::DgUnplug:
                case EventKind::DgPlug: ev.index = find_named(s.dgs, ev.target, "DG"); break;
                case EventKind::BreakerOpen:
                case EventKind::BreakerClose: ev.index = find_named(s.network.lines, ev.target, "line"); break;
                case EventKind::LinkDown:
                case EventKind::LinkUp: {
                    std::string a, b;
                    if (auto pos = ev.target.find("->"); pos != std::string::npos) {
                        a = ev.target.substr(0, pos);
                        b = ev.target.substr(pos + 2);
                        ev.bidirectional = false;
                    } else if (auto dash = ev.target.find('-'); dash != std::string::npos) {
                        a = ev.target.substr(0, dash);
                        b = ev.target.substr(dash + 1);
                    } else {
                        throw ScenarioError("link target '" + ev.target + "' must read 'A-B' or 'A->B'");
                    }
                    ev.link_from = find_named(s.dgs, a, "DG");
                    ev.link_to = find_named(s.dgs, b, "DG");
                    const bool listed = std::any_of(s.comm_links.begin(), s.comm_links.end(), [&](const auto& l) {
                        return (l.first == ev.link_from && l.second == ev.link_to) ||
                               (l.first == ev.link_to && l.second == ev.link_from);
                    });
                    if (!listed) throw ScenarioError("link event on '" + ev.target + "' names no configured link");
                    break;
                }
                case EventKind::SecondaryOn: break;
            }
            s.events.push_back(ev);
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ScenarioError("scenario " + path + " is not valid JSON: " + e.what());
    }
    return parse_scenario(j);
}

}  // namespace mgrid::scenario
