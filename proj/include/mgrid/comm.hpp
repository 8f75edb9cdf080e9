#pragma once

// Leader-pinned communication graph and scripted link failures.

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace mgrid::comm {

/// Id used for the virtual leader in neighbor lists.
inline constexpr int kLeader = -1;

class CommGraph {
public:
    /// adjacency(i, j) > 0 means i receives from j. Throws when the graph
    /// with leader pins lacks a spanning tree rooted at the leader.
    CommGraph(Eigen::MatrixXd adjacency, Eigen::VectorXd pinning);

    /// Undirected unit-weight graph from an edge list (0-based ids).
    static CommGraph undirected(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<int>& pinned);

    int size() const { return static_cast<int>(adjacency_.rows()); }
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }
    const Eigen::VectorXd& pinning() const { return pinning_; }

    /// L = D - A + B.
    Eigen::MatrixXd laplacian() const;

    /// Ascending ids, leader last when pinned.
    std::vector<int> neighbors(int i) const;

    bool spans_from_leader() const;

private:
    Eigen::MatrixXd adjacency_;
    Eigen::VectorXd pinning_;
};

struct DownInterval {
    double start = 0.0;
    double end = 0.0;  // half-open [start, end)
};

struct EdgeSchedule {
    int from = 0;
    int to = 0;
    std::vector<DownInterval> down;
};

class LinkSchedule {
public:
    LinkSchedule() = default;
    explicit LinkSchedule(std::vector<EdgeSchedule> edges);

    bool is_down(int from, int to, double t) const;
    const std::vector<EdgeSchedule>& edges() const { return edges_; }

private:
    std::vector<EdgeSchedule> edges_;
};

struct PredictionMessage {
    int sender = 0;
    long issued_at = 0;
    Eigen::VectorXd payload;
};

struct Delivery {
    int from = 0;
    int to = 0;
    bool delivered = true;
    PredictionMessage message;
};

/// Fans each message out to every receiver that lists the sender as a
/// neighbor, dropping those on a down edge at time t.
std::vector<Delivery> deliver(const CommGraph& g, const std::vector<PredictionMessage>& msgs,
                              const LinkSchedule& sched, double t);

Eigen::VectorXd leader_sequence(double v_ref, int horizon);

}  // namespace mgrid::comm
