#include "mgrid/comm.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace mgrid::comm {

CommGraph::CommGraph(Eigen::MatrixXd adjacency, Eigen::VectorXd pinning)
    : adjacency_(std::move(adjacency)), pinning_(std::move(pinning)) {
    const Eigen::Index n = adjacency_.rows();
    if (n == 0 || adjacency_.cols() != n || pinning_.size() != n) {
        throw std::invalid_argument("communication graph needs a square adjacency and one pin per node");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency_(i, i) != 0.0) throw std::invalid_argument("adjacency diagonal must be zero");
        if (pinning_[i] < 0.0) throw std::invalid_argument("pinning gains must be non-negative");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (adjacency_(i, j) < 0.0) throw std::invalid_argument("adjacency weights must be non-negative");
        }
    }
    if (!spans_from_leader()) {
        throw std::invalid_argument("communication graph has no spanning tree rooted at the leader");
    }
}

CommGraph CommGraph::undirected(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<int>& pinned) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n || u == v) {
            throw std::invalid_argument("communication link has invalid endpoints");
        }
        a(u, v) = a(v, u) = 1.0;
    }
    for (int p : pinned) {
        if (p < 0 || p >= n) throw std::invalid_argument("pinned id out of range");
        b[p] = 1.0;
    }
    return CommGraph(a, b);
}

Eigen::MatrixXd CommGraph::laplacian() const {
    Eigen::MatrixXd l = -adjacency_;
    for (Eigen::Index i = 0; i < l.rows(); ++i) l(i, i) = adjacency_.row(i).sum() + pinning_[i];
    return l;
}

std::vector<int> CommGraph::neighbors(int i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("unknown DG id " + std::to_string(i));
    std::vector<int> out;
    for (int j = 0; j < size(); ++j) {
        if (adjacency_(i, j) > 0.0) out.push_back(j);
    }
    if (pinning_[i] > 0.0) out.push_back(kLeader);
    return out;
}

bool CommGraph::spans_from_leader() const {
    // Information flows j -> i when a_ij > 0; the leader reaches pinned nodes.
    const int n = size();
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    for (int i = 0; i < n; ++i) {
        if (pinning_[i] > 0.0) {
            seen[i] = true;
            frontier.push(i);
        }
    }
    while (!frontier.empty()) {
        const int j = frontier.front();
        frontier.pop();
        for (int i = 0; i < n; ++i) {
            if (!seen[i] && adjacency_(i, j) > 0.0) {
                seen[i] = true;
                frontier.push(i);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

LinkSchedule::LinkSchedule(std::vector<EdgeSchedule> edges) : edges_(std::move(edges)) {
    for (auto& e : edges_) {
        std::sort(e.down.begin(), e.down.end(), [](const DownInterval& a, const DownInterval& b) { return a.start < b.start; });
        for (std::size_t k = 0; k < e.down.size(); ++k) {
            if (!(e.down[k].start < e.down[k].end)) throw std::invalid_argument("link down interval must have start < end");
            if (k > 0 && e.down[k].start < e.down[k - 1].end) {
                throw std::invalid_argument("link down intervals overlap on edge " + std::to_string(e.from + 1) + "->" +
                                            std::to_string(e.to + 1));
            }
        }
    }
}

bool LinkSchedule::is_down(int from, int to, double t) const {
    for (const auto& e : edges_) {
        if (e.from != from || e.to != to) continue;
        for (const auto& d : e.down) {
            if (t >= d.start && t < d.end) return true;
        }
    }
    return false;
}

std::vector<Delivery> deliver(const CommGraph& g, const std::vector<PredictionMessage>& msgs,
                              const LinkSchedule& sched, double t) {
    std::vector<Delivery> out;
    for (const auto& msg : msgs) {
        for (int i = 0; i < g.size(); ++i) {
            if (g.adjacency()(i, msg.sender) <= 0.0) continue;
            out.push_back({msg.sender, i, !sched.is_down(msg.sender, i, t), msg});
        }
    }
    return out;
}

Eigen::VectorXd leader_sequence(double v_ref, int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    return Eigen::VectorXd::Constant(horizon, v_ref);
}

}  // namespace mgrid::comm
