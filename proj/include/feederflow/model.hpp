#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "feederflow/errors.hpp"

namespace feederflow {

/// Voltage amplitudes below this guard are treated as collapse: the
/// right-hand side divides by v^2 and v^3.
inline constexpr double kVoltageFloor = 1e-6;

/// Per-unit line constants of a straight feeder on [0, L].
///
/// g is the shunt-referred conductance per unit length and must be positive;
/// the susceptance b may take either sign. Resistance and reactance per unit
/// length follow from (R + jX)^{-1} = g - jb.
struct FeederParams {
    double g = 1.0;  // conductance per unit length
    double b = 1.0;  // susceptance per unit length
    double L = 1.0;  // feeder length

    double admittance_norm_sq() const { return g * g + b * b; }
    double resistance() const { return g / admittance_norm_sq(); }
    double reactance() const { return b / admittance_norm_sq(); }

    /// Throws ValidationError unless g > 0 and L > 0.
    void validate() const;

    bool operator==(const FeederParams&) const = default;
};

/// One-sided limit selector for piecewise densities. Right means the value
/// on [x, x + dx), Left the value on (x - dx, x]. Smooth profiles ignore it.
enum class Side { Left, Right };

/// Spatial active/reactive power density pair along the feeder.
///
/// Sign convention: positive densities supply power into the line, negative
/// densities consume from it. The terminal carries no load, so evaluation at
/// x = L is zero for every concrete profile.
class Profile {
public:
    virtual ~Profile() = default;

    /// (p, q) at position x, taking the limit from `side` at jump points.
    virtual Eigen::Vector2d density(double x, Side side = Side::Right) const = 0;

    /// Positions in (0, L) where the densities may jump, ascending.
    virtual std::vector<double> breakpoints() const { return {}; }

    /// (∫p dx, ∫q dx) over [0, L].
    virtual Eigen::Vector2d integral() const = 0;
};

/// Piecewise-constant block of load/supply density on [x_start, x_end).
struct Segment {
    double x_start = 0.0;
    double x_end = 0.0;
    double p_density = 0.0;
    double q_density = 0.0;

    bool operator==(const Segment&) const = default;
};

/// Cosine-squared bump: amplitude * (1 + cos(pi*(x - center)/half_width))/2
/// on |x - center| <= half_width, zero outside. C^1 with compact support.
struct Bump {
    double center = 0.0;
    double half_width = 0.0;
    double p_amplitude = 0.0;
    double q_amplitude = 0.0;

    bool operator==(const Bump&) const = default;
};

/// Sum of piecewise-constant segments and smooth bumps on [0, length].
class PowerProfile final : public Profile {
public:
    PowerProfile() = default;
    PowerProfile(double length, std::vector<Segment> segments, std::vector<Bump> bumps);

    double length() const { return length_; }
    const std::vector<Segment>& segments() const { return segments_; }
    const std::vector<Bump>& bumps() const { return bumps_; }
    bool empty() const { return segments_.empty() && bumps_.empty(); }

    /// Supports inside [0, length], segments ordered and non-overlapping.
    /// Throws ValidationError naming the offending entries.
    void validate() const;

    /// Component-wise sum of two profiles over the same length. Overlap
    /// between the operands is allowed; densities add.
    PowerProfile combined_with(const PowerProfile& other) const;

    Eigen::Vector2d density(double x, Side side = Side::Right) const override;
    std::vector<double> breakpoints() const override;
    Eigen::Vector2d integral() const override;  // closed form

    // Not defaulted: the polymorphic base would delete the default.
    bool operator==(const PowerProfile& other) const {
        return length_ == other.length_ && segments_ == other.segments_ && bumps_ == other.bumps_;
    }

private:
    double length_ = 1.0;
    std::vector<Segment> segments_;
    std::vector<Bump> bumps_;
};

/// Pointwise sum of two profiles; non-owning views of both operands.
class CombinedProfile final : public Profile {
public:
    CombinedProfile(const Profile& a, const Profile& b) : a_(a), b_(b) {}

    Eigen::Vector2d density(double x, Side side = Side::Right) const override {
        return a_.density(x, side) + b_.density(x, side);
    }
    std::vector<double> breakpoints() const override;
    Eigen::Vector2d integral() const override { return a_.integral() + b_.integral(); }

private:
    const Profile& a_;
    const Profile& b_;
};

/// Solution variables at one position: voltage phase, voltage amplitude,
/// supplemental variable s = -v^2 dθ/dx, and voltage gradient w = dv/dx.
struct State {
    double theta = 0.0;
    double v = 1.0;
    double s = 0.0;
    double w = 0.0;

    Eigen::Vector4d vec() const { return {theta, v, s, w}; }
    static State from(const Eigen::Vector4d& y) { return {y[0], y[1], y[2], y[3]}; }
};

/// Right-hand side of the voltage-profile ODE system:
///   dθ/dx = -s/v²
///   dv/dx = w
///   ds/dx = (b·p - g·q)/(g² + b²)
///   dw/dx = s²/v³ - (g·p + b·q)/((g² + b²)·v)
/// Components ordered (θ, v, s, w). Throws VoltageCollapse when v < kVoltageFloor.
Eigen::Vector4d rhs(const Eigen::Vector4d& y, double p, double q, const FeederParams& prm);
State rhs(const State& st, double p, double q, const FeederParams& prm);

/// Residuals of the active (A) and reactive (R) power subsystem ODEs in
/// terms of v, θ and their first two derivatives; both vanish on an exact
/// solution. Returns (res_A, res_R).
Eigen::Vector2d subsystem_residuals(double v, double dv, double d2v,
                                    double theta, double dtheta, double d2theta,
                                    double p, double q, const FeederParams& prm);

/// Supply rates of the voltage and phase subsystems:
///   σ_V = (g·p + b·q)/(g² + b²),  σ_P = (b·p - g·q)/(g² + b²).
Eigen::Vector2d supply_rates(double p, double q, const FeederParams& prm);

/// Inverse of supply_rates: recovers (p, q) from (σ_V, σ_P) exactly,
///   p = b·σ_P + g·σ_V,  q = b·σ_V - g·σ_P.
Eigen::Vector2d powers_from_supply_rates(const Eigen::Vector2d& sigma, const FeederParams& prm);

/// Scalar function with its first two derivatives.
struct SmoothFunction {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
    std::function<double(double)> deriv2;
};

/// f(x) = offset + amplitude·(x³ - (3/2)·L·x²): f(0) = offset and
/// f'(0) = f'(L) = 0, so the pair (v, θ) built from it is compatible with
/// the boundary conditions at both ends.
SmoothFunction boundary_cubic(double amplitude, double offset, double L);

/// Analytic (v, θ) pair with the power densities that make it an exact
/// solution, obtained by solving the subsystem ODEs for p and q. Serves as
/// ground truth for the boundary-value solver.
class ManufacturedSolution final : public Profile {
public:
    /// Requires v(0) = 1, θ(0) = 0, v'(L) = 0, θ'(L) = 0 (so the terminal
    /// conditions s(L) = w(L) = 0 hold) and v > 0 on [0, L]; checked
    /// numerically, DomainError otherwise.
    ManufacturedSolution(SmoothFunction v_fn, SmoothFunction theta_fn, FeederParams prm);

    Eigen::Vector2d density(double x, Side side = Side::Right) const override;
    Eigen::Vector2d integral() const override;

    /// Exact solution state at x: θ, v, s = -v²θ', w = v'.
    State state(double x) const;
    double v(double x) const { return v_fn_.value(x); }
    double theta(double x) const { return theta_fn_.value(x); }

    const FeederParams& params() const { return params_; }

private:
    SmoothFunction v_fn_;
    SmoothFunction theta_fn_;
    FeederParams params_;
};

/// Discretized solution on the uniform grid x_i = i·L/N, i = 0..N.
class SolutionGrid {
public:
    SolutionGrid(double length, Eigen::ArrayXd theta, Eigen::ArrayXd v,
                 Eigen::ArrayXd s, Eigen::ArrayXd w);

    double length() const { return length_; }
    int intervals() const { return static_cast<int>(theta_.size()) - 1; }
    int nodes() const { return static_cast<int>(theta_.size()); }
    double spacing() const { return length_ / intervals(); }
    double x(int i) const { return i * spacing(); }
    Eigen::ArrayXd xs() const;

    const Eigen::ArrayXd& theta() const { return theta_; }
    const Eigen::ArrayXd& v() const { return v_; }
    const Eigen::ArrayXd& s() const { return s_; }
    const Eigen::ArrayXd& w() const { return w_; }

    State state(int i) const { return {theta_[i], v_[i], s_[i], w_[i]}; }

    /// dθ/dx at every node via the exact substitution -s/v².
    Eigen::ArrayXd theta_gradient() const { return -s_ / (v_ * v_); }

private:
    double length_;
    Eigen::ArrayXd theta_, v_, s_, w_;
};

}  // namespace feederflow
