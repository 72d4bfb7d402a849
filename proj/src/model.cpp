#include "pme/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pme {

PmeModel::PmeModel(double m, int dim) : m_(m), dim_(dim)
{
    if (!(m > 1.0)) {
        throw std::invalid_argument("PmeModel: exponent m must be > 1, got " + std::to_string(m));
    }
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("PmeModel: dimension must be 1 or 2");
    }
    if (m == std::floor(m) && m <= 32.0) {
        int_m_ = static_cast<int>(m);
    }
}

double PmeModel::power(double rho, int shift) const
{
    if (int_m_ == 0) {
        return std::pow(rho, m_ - shift);
    }
    double r = 1.0;
    for (int k = 0; k < int_m_ - shift; ++k) {
        r *= rho;
    }
    return r;
}

double PmeModel::f(double rho) const
{
    if (rho < 0.0) {
        throw std::domain_error("free energy density: negative density");
    }
    return power(rho, 0) / (m_ - 1.0);
}

double PmeModel::df(double rho) const
{
    if (rho < 0.0) {
        throw std::domain_error("free energy derivative: negative density");
    }
    return m_ * power(rho, 1) / (m_ - 1.0);
}

double PmeModel::f_extended(double rho) const
{
    if (rho >= 0.0) {
        return power(rho, 0) / (m_ - 1.0);
    }
    if (m_ != std::floor(m_)) {
        throw std::domain_error("negative density with non-integer exponent (assumption A2 violated)");
    }
    return power(rho, 0) / (m_ - 1.0);
}

double PmeModel::df_extended(double rho) const
{
    if (rho >= 0.0) {
        return m_ * power(rho, 1) / (m_ - 1.0);
    }
    if (m_ != std::floor(m_)) {
        throw std::domain_error("negative density with non-integer exponent (assumption A2 violated)");
    }
    return m_ * power(rho, 1) / (m_ - 1.0);
}

double free_energy_density(double rho, const PmeModel& model) { return model.f(rho); }

double free_energy_density_prime(double rho, const PmeModel& model) { return model.df(rho); }

BarenblattParams::BarenblattParams(double m_, int dim_, double C_) : m(m_), dim(dim_), C(C_)
{
    if (!(m > 1.0)) {
        throw std::invalid_argument("BarenblattParams: m must be > 1");
    }
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("BarenblattParams: dimension must be 1 or 2");
    }
    if (!(C > 0.0)) {
        throw std::invalid_argument("BarenblattParams: C must be positive");
    }
    const double d = dim;
    alpha = d / (d * (m - 1.0) + 2.0);
    beta = alpha / d;
    k = alpha * (m - 1.0) / (2.0 * m * d);
}

double barenblatt(std::span<const double> point, double t, const BarenblattParams& p)
{
    if (!(t > 0.0)) {
        throw std::domain_error("barenblatt: time must be positive");
    }
    double r2 = 0.0;
    for (double c : point) {
        r2 += c * c;
    }
    const double inner = p.C - p.k * r2 * std::pow(t, -2.0 * p.beta);
    if (inner <= 0.0 || std::sqrt(r2) >= barenblatt_support_radius(t, p)) {
        return 0.0;
    }
    return std::pow(t, -p.alpha) * std::pow(inner, 1.0 / (p.m - 1.0));
}

double barenblatt_support_radius(double t, const BarenblattParams& p)
{
    if (!(t > 0.0)) {
        throw std::domain_error("barenblatt_support_radius: time must be positive");
    }
    return std::sqrt(p.C / p.k) * std::pow(t, p.beta);
}

double waiting_time_initial_1d(double x, const WaitingTimeParams1D& p)
{
    if (x < -std::numbers::pi || x > 0.0) {
        return 0.0;
    }
    const double s2 = std::sin(x) * std::sin(x);
    const double base = (p.m - 1.0) / p.m * ((1.0 - p.theta) * s2 + p.theta * s2 * s2);
    if (base <= 0.0) {
        return 0.0;
    }
    return std::pow(base, 1.0 / (p.m - 1.0));
}

double critical_waiting_time(const WaitingTimeParams1D& p)
{
    if (p.theta < 0.0 || p.theta > 0.25) {
        throw std::domain_error("critical_waiting_time: closed form only holds for theta in [0, 1/4]");
    }
    if (!(p.m > 1.0)) {
        throw std::domain_error("critical_waiting_time: m must be > 1");
    }
    return 1.0 / (2.0 * (p.m + 1.0) * (1.0 - p.theta));
}

double waiting_time_initial_2d(double x, double y)
{
    const double r = std::hypot(x, y);
    if (r > std::numbers::pi) {
        return 0.0;
    }
    const double s = std::sin(r - std::numbers::pi);
    return 0.5 * s * s;
}

double horseshoe_initial(double x, double y)
{
    constexpr double w2 = 0.25 * 0.25;
    const double r = std::hypot(x, y);
    if (r > 0.5 && r < 1.0 && (x < 0.0 || y < 0.0)) {
        const double q = w2 - (r - 0.75) * (r - 0.75);
        return 50.0 * q * q;
    }
    if (x * x + (y - 0.75) * (y - 0.75) <= w2 && x >= 0.0) {
        const double q = w2 - x * x - (y - 0.75) * (y - 0.75);
        return 50.0 * q * q;
    }
    // End cap on the positive x-axis; it closes the annular arc on the y >= 0 side,
    // mirroring the cap above under the reflection x <-> y.
    if ((x - 0.75) * (x - 0.75) + y * y <= w2 && y >= 0.0) {
        const double q = w2 - (x - 0.75) * (x - 0.75) - y * y;
        return 50.0 * q * q;
    }
    return 0.0;
}

double two_peak_initial(double x, double y)
{
    const double a = (x - 0.3) * (x - 0.3) + (y - 0.3) * (y - 0.3);
    const double b = (x + 0.3) * (x + 0.3) + (y + 0.3) * (y + 0.3);
    return std::exp(-20.0 * a) + std::exp(-20.0 * b) + 0.001;
}

} // namespace pme
