#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mfg/closedform.hpp"
#include "mfg/montecarlo.hpp"
#include "mfg/population.hpp"
#include "mfg/rng.hpp"

namespace mfg {

/// Arguments of the mean-field BSDE driver at one instant. y_tilde holds every
/// type's value because the exponent involves E[Y~ / (1 - gamma)].
struct DriverInput {
    const Population* pop = nullptr;
    std::size_t type = 0;
    double t = 0.0;
    std::vector<double> y_tilde;
    double z_tilde = 0.0;
    double z0_tilde = 0.0;
};

/// The Z-dependent part J of the driver for type k at time t. Scalar
/// (z_tilde, z0_tilde) are taken to be shared by every type.
double eval_J(const Population& pop, std::size_t k, double t, double z_tilde, double z0_tilde);

/// Consumption rates recovered from Y~ of every type (the exponential term of the driver).
std::vector<double> consumption_from_tilde_y(const Population& pop, std::span<const double> y_tilde);

/// J + (1 - gamma) e_k + theta gamma E[e], with e the exponential terms.
double bsde_driver(const DriverInput& input);

struct ResidualReport {
    /// dY~/dt + driver per type; endpoints use one-sided differences.
    std::vector<GridCurve> residual;
    /// Max |residual| over interior knots and all types.
    double sup_norm = 0.0;
    std::size_t n_steps = 0;
};

ResidualReport bsde_residual(const Population& pop, const EquilibriumSolution& sol);

/// Arguments of the martingale-optimality drift bracket.
struct MopState {
    double y = 0.0;       // backward component Y
    double nu_hat = 0.0;  // log consumption index
    double h = 0.0;
    double sigma = 0.0;
    double sigma0 = 0.0;
    double gamma = 0.5;
    double theta = 0.0;
    double alpha = 1.0;
    double z = 0.0;
    double z0 = 0.0;
};

/// Drift of the reward process divided by the positive factor X^gamma e^Y:
///   -(1-gamma)/2 S (pi - p)^2 + [-c + (alpha/gamma) e^{-Y} (c e^{-theta nu})^gamma
///                                 - (1-gamma)/gamma (alpha e^{-Y - theta gamma nu})^{1/(1-gamma)}]
/// with p = (h + sigma Z + sigma0 Z0) / ((1-gamma) S). Non-positive for every
/// (pi, c), zero at the maximizer. DomainError when c <= 0.
double mop_drift(const MopState& state, double pi, double c);

/// The pair (pi, c) that zeroes the bracket.
std::pair<double, double> mop_maximizer(const MopState& state);

enum class GammaRegime { positive, negative };

struct MopCheck {
    std::size_t n_draws = 0;
    double max_drift = 0.0;          // over random (state, pi, c)
    double max_abs_at_optimum = 0.0;  // |drift| at the maximizer of each state
};

/// Random states with gamma in [0.05, 0.9] or [-4, -0.05], Y, nu-hat, Z, Z0 in
/// [-1, 1], alpha in [0.2, 2]; pi uniform on [-10, 10] and c log-uniform on
/// [1e-3, 10]. States whose optimal c falls outside [1e-3, 10] are redrawn.
/// Draw i depends only on (seed, i).
MopCheck mop_random_check(std::size_t n, const CounterRng& rng, GammaRegime regime);

/// V = (1/gamma) exp(gamma log x0 + Y0) with Y0 = Y~_0 - theta gamma E[log x].
double value_function(const Population& pop, std::size_t k, const EquilibriumSolution& sol);

/// Investment rate expressed through (Z~, Z~0).
double investment_from_tilde_z(const Population& pop, std::size_t k, double t, double z_tilde, double z0_tilde);
/// Z0 expressed through (Z~, Z~0).
double z0_from_tilde_z(const Population& pop, std::size_t k, double t, double z_tilde, double z0_tilde);

struct RelationReport {
    double investment_gap = 0.0;  // closed form vs the (Z~, Z~0) representation at Z~ = Z~0 = 0
    double nu_hat_gap = 0.0;      // nu-hat from the FBSDE characterization vs E[log c*] + mu-hat
    double z0_gap = 0.0;          // Z0 reconstruction vs the closed form
};

RelationReport relation_check(const Population& pop, const EquilibriumSolution& sol, const MeanFieldFlow& flow);

}  // namespace mfg
