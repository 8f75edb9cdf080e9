#pragma once

#include <stdexcept>
#include <string>

namespace mgrid {

/// Invalid scenario file or configuration. The CLI maps this to exit code 2.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state became non-finite during integration. Exit code 3.
class PlantDivergence : public std::runtime_error {
public:
    PlantDivergence(const std::string& what, int dg, int state_index, double t)
        : std::runtime_error(what), dg_(dg), state_index_(state_index), t_(t) {}

    int dg() const { return dg_; }
    int state_index() const { return state_index_; }
    double time() const { return t_; }

private:
    int dg_;
    int state_index_;
    double t_;
};

}  // namespace mgrid
