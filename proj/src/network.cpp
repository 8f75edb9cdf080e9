#include "mgrid/network.hpp"

#include "mgrid/errors.hpp"
#include "mgrid/rk4.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace mgrid::physics {

namespace {

constexpr std::size_t kN = DGState::kSize;

// -omega * J * i with J the quarter-turn matrix.
inline Dq rotate_term(double omega, const Dq& i) { return {omega * i.y(), -omega * i.x()}; }

inline Dq rotate(const Dq& v, double c, double s) { return {c * v.x() - s * v.y(), s * v.x() + c * v.y()}; }

inline DGState load_dg(const double* x) {
    std::array<double, kN> a;
    std::copy(x, x + kN, a.begin());
    return DGState::from_array(a);
}

}  // namespace

void NetworkModel::validate() const {
    if (n_buses <= 0) throw std::invalid_argument("network needs at least one bus");
    if (!(r_n > 0.0)) throw std::invalid_argument("network.R_n must be positive");
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const Line& ln = lines[k];
        if (ln.from < 0 || ln.from >= n_buses || ln.to < 0 || ln.to >= n_buses || ln.from == ln.to) {
            throw std::invalid_argument("line " + std::to_string(k) + " has invalid endpoints");
        }
        if (!(ln.l > 0.0) || ln.r < 0.0) throw std::invalid_argument("line " + std::to_string(k) + " needs L > 0, R >= 0");
    }
    for (std::size_t k = 0; k < loads.size(); ++k) {
        const Load& ld = loads[k];
        if (ld.bus < 0 || ld.bus >= n_buses) throw std::invalid_argument("load " + std::to_string(k) + " has invalid bus");
        if (!(ld.l > 0.0) || ld.r < 0.0) throw std::invalid_argument("load " + std::to_string(k) + " needs L > 0, R >= 0");
    }
}

std::vector<Dq> virtual_resistor_voltages(double r_n, const std::vector<Dq>& injected) {
    std::vector<Dq> v;
    v.reserve(injected.size());
    for (const Dq& i : injected) v.push_back(r_n * i);
    return v;
}

double DGDrive::setpoint(const DGParams& p, const DGState& s, const Dq& v_b_local, double t) const {
    if (!law) return v_n;
    const double omega_i = omega_n - p.m_p * s.p;
    return law(s, v_b_local, omega_i, t);
}

Plant::Plant(std::vector<DGParams> dgs, std::vector<int> dg_bus, NetworkModel net)
    : params_(std::move(dgs)), dg_bus_(std::move(dg_bus)), online_(params_.size(), true), net_(std::move(net)) {
    if (params_.empty()) throw std::invalid_argument("plant needs at least one DG");
    if (dg_bus_.size() != params_.size()) throw std::invalid_argument("one connection bus per DG required");
    net_.validate();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        params_[i].validate();
        if (dg_bus_[i] < 0 || dg_bus_[i] >= net_.n_buses) {
            throw std::invalid_argument("DG " + std::to_string(i + 1) + " connects to an unknown bus");
        }
    }
    refactor();
}

void Plant::refactor() const {
    const int n = net_.n_buses;
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
    std::vector<bool> grounded(n, false);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!online_[i]) continue;
        y(dg_bus_[i], dg_bus_[i]) += 1.0 / params_[i].l_c;
        grounded[dg_bus_[i]] = true;
    }
    for (const Load& ld : net_.loads) {
        if (!ld.connected) continue;
        y(ld.bus, ld.bus) += 1.0 / ld.l;
        grounded[ld.bus] = true;
    }
    // Union-find over closed lines to locate floating islands.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const Line& ln : net_.lines) {
        if (!ln.closed) continue;
        const double g = 1.0 / ln.l;
        y(ln.from, ln.from) += g;
        y(ln.to, ln.to) += g;
        y(ln.from, ln.to) -= g;
        y(ln.to, ln.from) -= g;
        parent[find(ln.from)] = find(ln.to);
    }
    std::vector<bool> island_grounded(n, false);
    for (int b = 0; b < n; ++b) {
        if (grounded[b]) island_grounded[find(b)] = true;
    }
    // A dead island carries no current; a unit shunt pins its voltage to zero.
    for (int b = 0; b < n; ++b) {
        const int root = find(b);
        if (!island_grounded[root]) {
            if (root == b) y(b, b) += 1.0;
        }
    }
    nodal_.compute(y);
    factored_ = true;
}

void Plant::closure_voltages(const double* x, double omega_com, std::vector<Dq>& v_bus) const {
    const std::size_t nd = params_.size();
    const int nb = net_.n_buses;
    const double* xl = x + kN * nd;
    const double* xo = xl + 2 * net_.lines.size();
    v_bus.assign(nb, Dq::Zero());

    if (net_.closure == Closure::VirtualResistor) {
        std::vector<Dq> inj(nb, Dq::Zero());
        for (std::size_t i = 0; i < nd; ++i) {
            if (!online_[i]) continue;
            const double* d = x + kN * i;
            const double c = std::cos(d[0]), s = std::sin(d[0]);
            inj[dg_bus_[i]] += rotate(Dq(d[11], d[12]), c, s);
        }
        for (std::size_t k = 0; k < net_.lines.size(); ++k) {
            const Line& ln = net_.lines[k];
            if (!ln.closed) continue;
            const Dq i(xl[2 * k], xl[2 * k + 1]);
            inj[ln.from] -= i;
            inj[ln.to] += i;
        }
        for (std::size_t k = 0; k < net_.loads.size(); ++k) {
            if (!net_.loads[k].connected) continue;
            inj[net_.loads[k].bus] -= Dq(xo[2 * k], xo[2 * k + 1]);
        }
        v_bus = virtual_resistor_voltages(net_.r_n, inj);
        return;
    }

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nb, 2);
    auto add = [&](int b, const Dq& v) {
        rhs(b, 0) += v.x();
        rhs(b, 1) += v.y();
    };
    for (std::size_t i = 0; i < nd; ++i) {
        if (!online_[i]) continue;
        const DGParams& p = params_[i];
        const double* d = x + kN * i;
        const double c = std::cos(d[0]), s = std::sin(d[0]);
        const Dq v_o = rotate(Dq(d[9], d[10]), c, s);
        const Dq i_o = rotate(Dq(d[11], d[12]), c, s);
        add(dg_bus_[i], (v_o - p.r_c * i_o) / p.l_c + rotate_term(omega_com, i_o));
    }
    for (std::size_t k = 0; k < net_.lines.size(); ++k) {
        const Line& ln = net_.lines[k];
        if (!ln.closed) continue;
        const Dq i(xl[2 * k], xl[2 * k + 1]);
        const Dq a = -ln.r / ln.l * i + rotate_term(omega_com, i);
        add(ln.to, a);
        add(ln.from, -a);
    }
    for (std::size_t k = 0; k < net_.loads.size(); ++k) {
        const Load& ld = net_.loads[k];
        if (!ld.connected) continue;
        const Dq i(xo[2 * k], xo[2 * k + 1]);
        add(ld.bus, -(-ld.r / ld.l * i + rotate_term(omega_com, i)));
    }
    const Eigen::MatrixXd v = nodal_.solve(rhs);
    for (int b = 0; b < nb; ++b) v_bus[b] = Dq(v(b, 0), v(b, 1));
}

PlantState Plant::initial_state(double v_n) const {
    PlantState s;
    for (const DGParams& p : params_) s.dgs.push_back(unloaded_equilibrium(p, v_n));
    s.line_i.assign(net_.lines.size(), Dq::Zero());
    s.load_i.assign(net_.loads.size(), Dq::Zero());
    return s;
}

Eigen::VectorXd Plant::pack(const PlantState& s) const {
    const std::size_t nd = params_.size();
    Eigen::VectorXd x(kN * nd + 2 * net_.lines.size() + 2 * net_.loads.size());
    for (std::size_t i = 0; i < nd; ++i) {
        const auto a = s.dgs[i].to_array();
        for (std::size_t j = 0; j < kN; ++j) x[kN * i + j] = a[j];
    }
    std::size_t o = kN * nd;
    for (const Dq& i : s.line_i) {
        x[o++] = i.x();
        x[o++] = i.y();
    }
    for (const Dq& i : s.load_i) {
        x[o++] = i.x();
        x[o++] = i.y();
    }
    return x;
}

PlantState Plant::unpack(const Eigen::VectorXd& x, double t) const {
    PlantState s;
    const std::size_t nd = params_.size();
    for (std::size_t i = 0; i < nd; ++i) s.dgs.push_back(load_dg(x.data() + kN * i));
    std::size_t o = kN * nd;
    for (std::size_t k = 0; k < net_.lines.size(); ++k, o += 2) s.line_i.emplace_back(x[o], x[o + 1]);
    for (std::size_t k = 0; k < net_.loads.size(); ++k, o += 2) s.load_i.emplace_back(x[o], x[o + 1]);
    s.t = t;
    return s;
}

double Plant::omega_com(const PlantState& s, const std::vector<DGDrive>& drives) const {
    return drives.at(0).omega_n - params_[0].m_p * s.dgs[0].p;
}

std::vector<Dq> Plant::bus_voltages(const PlantState& s) const {
    const Eigen::VectorXd x = pack(s);
    std::vector<Dq> v;
    closure_voltages(x.data(), kNominalOmega - params_[0].m_p * s.dgs[0].p, v);
    return v;
}

Dq Plant::local_bus_voltage(const PlantState& s, std::size_t i) const {
    const std::vector<Dq> v = bus_voltages(s);
    return frame_transform(v[dg_bus_[i]], s.dgs[i].delta, FrameDirection::ToLocal);
}

Eigen::VectorXd Plant::derivative(const Eigen::VectorXd& x, const std::vector<DGDrive>& drives, double t) const {
    const std::size_t nd = params_.size();
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(x.size());
    const double omega_com = drives[0].omega_n - params_[0].m_p * x[1];

    std::vector<Dq> v_bus;
    closure_voltages(x.data(), omega_com, v_bus);

    for (std::size_t i = 0; i < nd; ++i) {
        if (!online_[i]) continue;  // frozen while unplugged
        const DGState s = load_dg(x.data() + kN * i);
        const double c = std::cos(s.delta), sn = std::sin(s.delta);
        const Dq vb_local = rotate(v_bus[dg_bus_[i]], c, -sn);
        DGInput in{drives[i].omega_n, drives[i].setpoint(params_[i], s, vb_local, t)};
        const auto d = dg_derivatives(params_[i], s, in, vb_local, omega_com).to_array();
        for (std::size_t j = 0; j < kN; ++j) dx[kN * i + j] = d[j];
    }
    // DG 0 is the frame reference.
    dx[0] = 0.0;

    const std::size_t ol = kN * nd;
    for (std::size_t k = 0; k < net_.lines.size(); ++k) {
        const Line& ln = net_.lines[k];
        if (!ln.closed) continue;
        const Dq i(x[ol + 2 * k], x[ol + 2 * k + 1]);
        const Dq di = (v_bus[ln.from] - v_bus[ln.to] - ln.r * i) / ln.l + rotate_term(omega_com, i);
        dx[ol + 2 * k] = di.x();
        dx[ol + 2 * k + 1] = di.y();
    }
    const std::size_t oo = ol + 2 * net_.lines.size();
    for (std::size_t k = 0; k < net_.loads.size(); ++k) {
        const Load& ld = net_.loads[k];
        if (!ld.connected) continue;
        const Dq i(x[oo + 2 * k], x[oo + 2 * k + 1]);
        const Dq di = (v_bus[ld.bus] - ld.r * i) / ld.l + rotate_term(omega_com, i);
        dx[oo + 2 * k] = di.x();
        dx[oo + 2 * k + 1] = di.y();
    }
    return dx;
}

std::vector<Dq> Plant::bus_current_imbalance(const PlantState& s) const {
    std::vector<Dq> c(net_.n_buses, Dq::Zero());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!online_[i]) continue;
        c[dg_bus_[i]] += frame_transform(s.dgs[i].i_o(), s.dgs[i].delta, FrameDirection::ToCommon);
    }
    for (std::size_t k = 0; k < net_.lines.size(); ++k) {
        if (!net_.lines[k].closed) continue;
        c[net_.lines[k].to] += s.line_i[k];
        c[net_.lines[k].from] -= s.line_i[k];
    }
    for (std::size_t k = 0; k < net_.loads.size(); ++k) {
        if (!net_.loads[k].connected) continue;
        c[net_.loads[k].bus] -= s.load_i[k];
    }
    return c;
}

void Plant::project_currents(PlantState& s) const {
    if (net_.closure != Closure::Kcl) return;
    const std::vector<Dq> c = bus_current_imbalance(s);
    Eigen::MatrixXd rhs(net_.n_buses, 2);
    for (int b = 0; b < net_.n_buses; ++b) {
        rhs(b, 0) = c[b].x();
        rhs(b, 1) = c[b].y();
    }
    const Eigen::MatrixXd psi_m = nodal_.solve(rhs);
    auto psi = [&](int b) { return Dq(psi_m(b, 0), psi_m(b, 1)); };

    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!online_[i]) continue;
        const Dq delta_common = -psi(dg_bus_[i]) / params_[i].l_c;
        const Dq delta_local = frame_transform(delta_common, s.dgs[i].delta, FrameDirection::ToLocal);
        s.dgs[i].i_od += delta_local.x();
        s.dgs[i].i_oq += delta_local.y();
    }
    for (std::size_t k = 0; k < net_.lines.size(); ++k) {
        const Line& ln = net_.lines[k];
        if (!ln.closed) continue;
        s.line_i[k] += (psi(ln.from) - psi(ln.to)) / ln.l;
    }
    for (std::size_t k = 0; k < net_.loads.size(); ++k) {
        const Load& ld = net_.loads[k];
        if (!ld.connected) continue;
        s.load_i[k] += psi(ld.bus) / ld.l;
    }
}

void Plant::set_load(PlantState& s, std::size_t load, bool connected) {
    Load& ld = net_.loads.at(load);
    if (ld.connected == connected) return;
    ld.connected = connected;
    s.load_i[load] = Dq::Zero();
    refactor();
    project_currents(s);
}

void Plant::set_line(PlantState& s, std::size_t line, bool closed) {
    Line& ln = net_.lines.at(line);
    if (ln.closed == closed) return;
    ln.closed = closed;
    s.line_i[line] = Dq::Zero();
    refactor();
    project_currents(s);
}

void Plant::unplug_dg(PlantState& s, std::size_t dg) {
    if (dg == 0) throw std::invalid_argument("the reference DG cannot be unplugged");
    if (!online_.at(dg)) return;
    online_[dg] = false;
    s.dgs[dg].i_od = 0.0;
    s.dgs[dg].i_oq = 0.0;
    refactor();
    project_currents(s);
}

void Plant::plug_dg(PlantState& s, std::size_t dg) {
    if (online_.at(dg)) return;
    // The returning unit comes back from its no-load operating point,
    // synchronized to the bus it closes onto.
    const std::vector<Dq> v = bus_voltages(s);
    const Dq vb = v[dg_bus_[dg]];
    DGState fresh = unloaded_equilibrium(params_[dg], vb.norm());
    fresh.delta = std::atan2(vb.y(), vb.x());
    s.dgs[dg] = fresh;
    online_[dg] = true;
    refactor();
}

PlantState integrate_step(const Plant& plant, const PlantState& s, const std::vector<DGDrive>& drives, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_step needs dt > 0");
    if (drives.size() != plant.n_dgs()) throw std::invalid_argument("one drive per DG required");
    const Eigen::VectorXd xn = rk4_step(
        [&](const Eigen::VectorXd& x, double t) { return plant.derivative(x, drives, t); }, plant.pack(s), s.t, dt);

    for (Eigen::Index j = 0; j < xn.size(); ++j) {
        if (std::isfinite(xn[j])) continue;
        const std::size_t dg_span = DGState::kSize * plant.n_dgs();
        std::ostringstream msg;
        msg << "plant diverged at t=" << s.t + dt << ": ";
        if (static_cast<std::size_t>(j) < dg_span) {
            const int dg = static_cast<int>(j / DGState::kSize);
            const int idx = static_cast<int>(j % DGState::kSize);
            msg << "DG" << dg + 1 << " state " << idx << " (" << state_name(idx) << ") is non-finite";
            throw PlantDivergence(msg.str(), dg, idx, s.t + dt);
        }
        msg << "network state " << j - dg_span << " is non-finite";
        throw PlantDivergence(msg.str(), -1, static_cast<int>(j - dg_span), s.t + dt);
    }
    return plant.unpack(xn, s.t + dt);
}

}  // namespace mgrid::physics
