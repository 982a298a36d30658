// chain_model.hpp — Dissipative endpoint birth-death generator and its discrete-time step

#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace opgap {

/// Raised for parameter sets that violate a documented precondition.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numerical procedure cannot produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Geometry {
    edge,      // one endpoint pinned at the left wall
    relative,  // operator size X = x_R - x_L, both endpoints mobile
    com,       // centre of mass on the doubled-resolution lattice 2Y
};

enum class Frame { original, hermitian };
enum class TimeKind { continuous, discrete };

std::string to_string(Geometry g);
Geometry parse_geometry(const std::string& s);

/// Full parameterisation of the endpoint chain on sites x = 1..L.
///
/// `bond_overrides` maps a bond index x (the bond between sites x and x+1) to a
/// factor g that multiplies both directed rates on that bond. Overrides are only
/// allowed inside the boundary region x <= boundary_extent.
///
/// For the com geometry the walk is unbiased: w_plus must equal w_minus and is the
/// gate rate r for half-site jumps; there is no dissipation term.
struct ChainSpec {
    std::size_t length = 0;
    double w_plus = 0.0;
    double w_minus = 0.0;
    double gamma = 0.0;
    bool use_dressed_rate = false;
    int q = 2;
    std::size_t boundary_extent = 0;
    std::map<std::size_t, double> bond_overrides;
    Geometry geometry = Geometry::edge;

    /// gamma_d = (1 - 1/q^2) gamma when dressing, else gamma.
    double dressed_gamma() const;

    /// Multiplier applied to both hopping rates by the geometry (2 for relative).
    double geometry_factor() const;

    /// Throws SpecError on any invariant violation (including length < 2).
    void validate() const;
};

/// Directed rates on each bond (x, x+1), index 0 = bond (1,2).
struct BondRates {
    std::vector<double> forward;   // x -> x+1
    std::vector<double> backward;  // x+1 -> x
};

BondRates bond_rates(const ChainSpec& spec);

/// Real tridiagonal matrix. sub[i] is entry (i+1, i), sup[i] is entry (i, i+1).
struct TridiagonalOperator {
    std::vector<double> sub;
    std::vector<double> diag;
    std::vector<double> sup;
    Frame frame = Frame::original;
    TimeKind time_kind = TimeKind::continuous;

    std::size_t size() const { return diag.size(); }
    double at(std::size_t row, std::size_t col) const;
    std::vector<double> column_sums() const;
    std::vector<double> apply(const std::vector<double>& v) const;
    /// max over rows of the absolute row sum.
    double norm_inf() const;
};

/// Continuous-time generator M of the endpoint walk in the original frame.
TridiagonalOperator build_generator(const ChainSpec& spec);

/// One step of the discrete-time walk, n_{t+1} = (I + M) n_t with rates per step.
TridiagonalOperator build_discrete_step(const ChainSpec& spec);

}  // namespace opgap
