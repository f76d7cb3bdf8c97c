#pragma once

#include <Eigen/Dense>

namespace feederflow {

class Profile;

/// First derivative of uniformly sampled values by 4th-order differences:
/// 5-point central stencil in the interior, one-sided 5-point stencils at
/// the two nodes nearest each end. Requires at least 5 samples.
Eigen::ArrayXd derivative_4th(const Eigen::ArrayXd& f, double h);

/// Composite Simpson quadrature over a uniform grid; the sample count must
/// be odd (an even number of intervals).
double simpson(const Eigen::ArrayXd& f, double h);

/// Composite Simpson of (p, q) over [0, L] on N intervals, sampling pair
/// endpoints with one-sided limits. Piecewise-constant densities whose
/// jumps sit on even nodes integrate exactly.
Eigen::Vector2d simpson_profile(const Profile& profile, double L, int n_intervals);

/// ∫(p, q) over [a, b], split at the profile's declared breakpoints with
/// one Simpson panel chain per smooth piece (one-sided limits at piece
/// edges). Exact for piecewise-constant densities at any alignment. Meant
/// for cell-sized windows: each smooth piece gets a fixed 8-interval rule,
/// so wide smooth spans belong to simpson_profile instead.
Eigen::Vector2d integrate_profile(const Profile& profile, double a, double b);

/// ∫(p, q)·w over [a, b] for the linear weight w(a) = w_a, w(b) = w_b,
/// split at breakpoints like integrate_profile (and with the same
/// cell-sized-window intent). Exact whenever density·w is piecewise cubic
/// between declared breakpoints.
Eigen::Vector2d integrate_profile_weighted(const Profile& profile, double a, double b, double w_a,
                                           double w_b);

/// Empirical convergence order log2(err_coarse/err_fine) from one grid
/// halving; +inf when the fine error has already hit zero.
double observed_order(double err_coarse, double err_fine);

}  // namespace feederflow
