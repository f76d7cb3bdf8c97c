#include "feederflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "feederflow/numerics.hpp"

namespace feederflow {

namespace {

// Boundary-compatibility checks on manufactured pairs are numerical.
constexpr double kBoundaryCompatTol = 1e-9;

std::string describe_range(const Segment& s) {
    std::ostringstream os;
    os << "[" << s.x_start << ", " << s.x_end << ")";
    return os.str();
}

}  // namespace

void FeederParams::validate() const {
    if (!(g > 0.0)) {
        throw ValidationError("feeder conductance g must be positive, got " + std::to_string(g));
    }
    if (!(L > 0.0)) {
        throw ValidationError("feeder length L must be positive, got " + std::to_string(L));
    }
}

PowerProfile::PowerProfile(double length, std::vector<Segment> segments, std::vector<Bump> bumps)
    : length_(length), segments_(std::move(segments)), bumps_(std::move(bumps)) {
    std::stable_sort(segments_.begin(), segments_.end(),
                     [](const Segment& a, const Segment& b) { return a.x_start < b.x_start; });
    std::stable_sort(bumps_.begin(), bumps_.end(),
                     [](const Bump& a, const Bump& b) { return a.center < b.center; });
}

void PowerProfile::validate() const {
    if (!(length_ > 0.0)) {
        throw ValidationError("profile length must be positive");
    }
    for (const Segment& s : segments_) {
        if (!(s.x_start < s.x_end)) {
            throw ValidationError("segment " + describe_range(s) + " is empty or inverted");
        }
        if (s.x_start < 0.0 || s.x_end > length_) {
            throw ValidationError("segment " + describe_range(s) +
                                  " lies outside the feeder [0, " + std::to_string(length_) + "]");
        }
    }
    for (std::size_t i = 1; i < segments_.size(); ++i) {
        const Segment& prev = segments_[i - 1];
        const Segment& cur = segments_[i];
        if (cur.x_start < prev.x_end) {
            throw ValidationError("segments " + describe_range(prev) + " and " +
                                  describe_range(cur) + " overlap");
        }
    }
    for (const Bump& b : bumps_) {
        if (!(b.half_width > 0.0)) {
            throw ValidationError("bump at " + std::to_string(b.center) +
                                  " must have positive half_width");
        }
        if (b.center - b.half_width < 0.0 || b.center + b.half_width > length_) {
            throw ValidationError("bump support [" + std::to_string(b.center - b.half_width) +
                                  ", " + std::to_string(b.center + b.half_width) +
                                  "] lies outside the feeder [0, " + std::to_string(length_) + "]");
        }
    }
}

PowerProfile PowerProfile::combined_with(const PowerProfile& other) const {
    if (other.length_ != length_) {
        throw ValidationError("cannot combine profiles of different lengths");
    }
    std::vector<Segment> segs = segments_;
    segs.insert(segs.end(), other.segments_.begin(), other.segments_.end());
    std::vector<Bump> bumps = bumps_;
    bumps.insert(bumps.end(), other.bumps_.begin(), other.bumps_.end());
    return PowerProfile(length_, std::move(segs), std::move(bumps));
}

Eigen::Vector2d PowerProfile::density(double x, Side side) const {
    Eigen::Vector2d pq = Eigen::Vector2d::Zero();
    for (const Segment& s : segments_) {
        const bool inside = (side == Side::Right) ? (s.x_start <= x && x < s.x_end)
                                                  : (s.x_start < x && x <= s.x_end);
        if (inside) {
            pq[0] += s.p_density;
            pq[1] += s.q_density;
        }
    }
    for (const Bump& b : bumps_) {
        const double u = x - b.center;
        if (std::abs(u) <= b.half_width) {
            const double shape = 0.5 * (1.0 + std::cos(M_PI * u / b.half_width));
            pq[0] += b.p_amplitude * shape;
            pq[1] += b.q_amplitude * shape;
        }
    }
    return pq;
}

std::vector<double> PowerProfile::breakpoints() const {
    std::vector<double> pts;
    for (const Segment& s : segments_) {
        if (s.x_start > 0.0 && s.x_start < length_) pts.push_back(s.x_start);
        if (s.x_end > 0.0 && s.x_end < length_) pts.push_back(s.x_end);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

Eigen::Vector2d PowerProfile::integral() const {
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    for (const Segment& s : segments_) {
        const double width = s.x_end - s.x_start;
        total[0] += s.p_density * width;
        total[1] += s.q_density * width;
    }
    // ∫ (1 + cos(pi u / w))/2 du over |u| <= w equals w.
    for (const Bump& b : bumps_) {
        total[0] += b.p_amplitude * b.half_width;
        total[1] += b.q_amplitude * b.half_width;
    }
    return total;
}

std::vector<double> CombinedProfile::breakpoints() const {
    std::vector<double> pts = a_.breakpoints();
    const std::vector<double> more = b_.breakpoints();
    pts.insert(pts.end(), more.begin(), more.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

Eigen::Vector4d rhs(const Eigen::Vector4d& y, double p, double q, const FeederParams& prm) {
    const double v = y[1];
    if (v < kVoltageFloor) {
        throw VoltageCollapse("voltage amplitude " + std::to_string(v) +
                              " fell below the collapse guard " + std::to_string(kVoltageFloor));
    }
    const double s = y[2];
    const double w = y[3];
    const double norm = prm.admittance_norm_sq();
    Eigen::Vector4d dy;
    dy[0] = -s / (v * v);
    dy[1] = w;
    dy[2] = (prm.b * p - prm.g * q) / norm;
    dy[3] = s * s / (v * v * v) - (prm.g * p + prm.b * q) / (norm * v);
    return dy;
}

State rhs(const State& st, double p, double q, const FeederParams& prm) {
    return State::from(rhs(st.vec(), p, q, prm));
}

Eigen::Vector2d subsystem_residuals(double v, double dv, double d2v,
                                    double theta, double dtheta, double d2theta,
                                    double p, double q, const FeederParams& prm) {
    (void)theta;  // the equations depend on θ only through its derivatives
    const double phase_term = 2.0 * v * dv * dtheta + v * v * d2theta;
    const double amp_term = v * d2v - v * v * dtheta * dtheta;
    const double res_active = p + prm.b * phase_term + prm.g * amp_term;
    const double res_reactive = q + prm.b * amp_term - prm.g * phase_term;
    return {res_active, res_reactive};
}

Eigen::Vector2d supply_rates(double p, double q, const FeederParams& prm) {
    const double norm = prm.admittance_norm_sq();
    return {(prm.g * p + prm.b * q) / norm, (prm.b * p - prm.g * q) / norm};
}

Eigen::Vector2d powers_from_supply_rates(const Eigen::Vector2d& sigma, const FeederParams& prm) {
    const double sigma_v = sigma[0];
    const double sigma_p = sigma[1];
    return {prm.b * sigma_p + prm.g * sigma_v, prm.b * sigma_v - prm.g * sigma_p};
}

SmoothFunction boundary_cubic(double amplitude, double offset, double L) {
    return SmoothFunction{
        [=](double x) { return offset + amplitude * (x * x * x - 1.5 * L * x * x); },
        [=](double x) { return amplitude * (3.0 * x * x - 3.0 * L * x); },
        [=](double x) { return amplitude * (6.0 * x - 3.0 * L); },
    };
}

ManufacturedSolution::ManufacturedSolution(SmoothFunction v_fn, SmoothFunction theta_fn,
                                           FeederParams prm)
    : v_fn_(std::move(v_fn)), theta_fn_(std::move(theta_fn)), params_(prm) {
    params_.validate();
    const double L = params_.L;
    if (std::abs(v_fn_.value(0.0) - 1.0) > kBoundaryCompatTol) {
        throw DomainError("manufactured v(0) = " + std::to_string(v_fn_.value(0.0)) +
                          " violates the transformer reference v(0) = 1");
    }
    if (std::abs(theta_fn_.value(0.0)) > kBoundaryCompatTol) {
        throw DomainError("manufactured θ(0) = " + std::to_string(theta_fn_.value(0.0)) +
                          " violates the transformer reference θ(0) = 0");
    }
    if (std::abs(v_fn_.deriv(L)) > kBoundaryCompatTol) {
        throw DomainError("manufactured v'(L) must vanish so that w(L) = 0 holds");
    }
    if (std::abs(theta_fn_.deriv(L)) > kBoundaryCompatTol) {
        throw DomainError("manufactured θ'(L) must vanish so that s(L) = 0 holds");
    }
    constexpr int kSamples = 1024;
    for (int i = 0; i <= kSamples; ++i) {
        const double x = L * i / kSamples;
        if (v_fn_.value(x) < kVoltageFloor) {
            throw DomainError("manufactured v(x) drops to " + std::to_string(v_fn_.value(x)) +
                              " near x = " + std::to_string(x));
        }
    }
}

Eigen::Vector2d ManufacturedSolution::density(double x, Side) const {
    const double v = v_fn_.value(x);
    const double dv = v_fn_.deriv(x);
    const double d2v = v_fn_.deriv2(x);
    const double dtheta = theta_fn_.deriv(x);
    const double d2theta = theta_fn_.deriv2(x);
    // Solve the subsystem ODEs for (p, q) given the analytic derivatives.
    const double phase_term = 2.0 * v * dv * dtheta + v * v * d2theta;
    const double amp_term = v * d2v - v * v * dtheta * dtheta;
    const double p = -(params_.b * phase_term + params_.g * amp_term);
    const double q = params_.g * phase_term - params_.b * amp_term;
    return {p, q};
}

Eigen::Vector2d ManufacturedSolution::integral() const {
    return simpson_profile(*this, params_.L, 1 << 14);
}

State ManufacturedSolution::state(double x) const {
    const double v = v_fn_.value(x);
    return State{theta_fn_.value(x), v, -v * v * theta_fn_.deriv(x), v_fn_.deriv(x)};
}

SolutionGrid::SolutionGrid(double length, Eigen::ArrayXd theta, Eigen::ArrayXd v,
                           Eigen::ArrayXd s, Eigen::ArrayXd w)
    : length_(length), theta_(std::move(theta)), v_(std::move(v)), s_(std::move(s)), w_(std::move(w)) {
    const auto n = theta_.size();
    if (n < 2 || v_.size() != n || s_.size() != n || w_.size() != n) {
        throw ValidationError("solution grid arrays must share a common size of at least 2");
    }
    if (!(length_ > 0.0)) {
        throw ValidationError("solution grid length must be positive");
    }
}

Eigen::ArrayXd SolutionGrid::xs() const {
    Eigen::ArrayXd out(nodes());
    const double h = spacing();
    for (int i = 0; i < nodes(); ++i) out[i] = i * h;
    return out;
}

}  // namespace feederflow
