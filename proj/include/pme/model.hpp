#pragma once

#include <span>

namespace pme {

/// Porous medium model: exponent m > 1 in dimension d (1 or 2).
class PmeModel {
public:
    PmeModel(double m, int dim);

    double m() const { return m_; }
    int dim() const { return dim_; }

    /// Free energy density f(rho) = rho^m / (m - 1).
    double f(double rho) const;
    /// Pressure f'(rho) = m rho^(m-1) / (m - 1).
    double df(double rho) const;

    /// Variants used on assembled fields: for rho < 0 they are evaluated as
    /// rho^m directly when m is an integer and throw std::domain_error otherwise.
    double f_extended(double rho) const;
    double df_extended(double rho) const;

private:
    double power(double rho, int shift) const;

    double m_;
    int dim_;
    // m as an integer when it is one (0 otherwise); powers then use plain products
    int int_m_ = 0;
};

double free_energy_density(double rho, const PmeModel& model);
double free_energy_density_prime(double rho, const PmeModel& model);

/// Self-similar Barenblatt-Pattle profile
///   B(x, t) = t^-alpha (C - k |x|^2 t^-2beta)_+^(1/(m-1)).
struct BarenblattParams {
    BarenblattParams(double m, int dim, double C);

    double m;
    int dim;
    double C;
    double alpha;
    double beta;
    double k;
};

double barenblatt(std::span<const double> point, double t, const BarenblattParams& p);
double barenblatt_support_radius(double t, const BarenblattParams& p);

struct WaitingTimeParams1D {
    double theta;
    double m;
};

/// Aronson-type initial profile supported on [-pi, 0].
double waiting_time_initial_1d(double x, const WaitingTimeParams1D& p);

/// Critical waiting time 1 / (2 (m + 1) (1 - theta)); only valid for theta in [0, 1/4].
double critical_waiting_time(const WaitingTimeParams1D& p);

/// 0.5 sin^2(r - pi) on the disk r <= pi.
double waiting_time_initial_2d(double x, double y);

/// Horseshoe-shaped compactly supported quartic bump (three branches, first match wins).
double horseshoe_initial(double x, double y);

/// Two Gaussian peaks over a 1e-3 floor.
double two_peak_initial(double x, double y);

} // namespace pme
