#include "hypwalk/measure.hpp"

#include <cmath>
#include <cstdlib>

namespace hypwalk {

Rational rational_from_decimal(const std::string& text) {
    std::string t = text;
    // split off exponent
    long exp10 = 0;
    auto epos = t.find_first_of("eE");
    if (epos != std::string::npos) {
        exp10 = std::strtol(t.c_str() + epos + 1, nullptr, 10);
        t = t.substr(0, epos);
    }
    bool negative = false;
    std::size_t i = 0;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) {
        negative = t[i] == '-';
        ++i;
    }
    boost::multiprecision::cpp_int numerator = 0;
    long frac_digits = 0;
    bool seen_dot = false, seen_digit = false;
    for (; i < t.size(); ++i) {
        char c = t[i];
        if (c == '.') {
            if (seen_dot) throw ValidationError("bad decimal literal: " + text);
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            numerator = numerator * 10 + (c - '0');
            if (seen_dot) ++frac_digits;
            seen_digit = true;
        } else {
            throw ValidationError("bad decimal literal: " + text);
        }
    }
    if (!seen_digit) throw ValidationError("bad decimal literal: " + text);
    if (negative) numerator = -numerator;
    boost::multiprecision::cpp_int denominator = 1;
    long net = frac_digits - exp10;
    for (long k = 0; k < std::abs(net); ++k) denominator *= 10;
    if (net >= 0) return Rational(numerator, denominator);
    return Rational(numerator * denominator, 1);
}

StepMeasure StepMeasure::uniform(const GroupModel& model) {
    int n = model.alphabet_size();
    std::vector<Rational> masses(static_cast<std::size_t>(n), Rational(1, n));
    return from_rationals(std::move(masses));
}

StepMeasure StepMeasure::from_rationals(std::vector<Rational> masses) {
    StepMeasure m;
    m.prob.reserve(masses.size());
    for (const auto& r : masses) m.prob.push_back(static_cast<double>(r));
    m.exact = std::move(masses);
    return m;
}

StepMeasure StepMeasure::from_doubles(std::vector<double> masses) {
    StepMeasure m;
    m.prob = std::move(masses);
    return m;
}

std::string MeasureViolation::describe(const GroupModel& model) const {
    switch (kind) {
        case Kind::NotSymmetric:
            return "NotSymmetric{" + model.alphabet().tokens[static_cast<std::size_t>(letter)] + "}";
        case Kind::ZeroMass:
            return "ZeroMass{" + model.alphabet().tokens[static_cast<std::size_t>(letter)] + "}";
        case Kind::NotNormalized:
            return "NotNormalized{" + std::to_string(sum) + "}";
    }
    return "?";
}

std::string MeasureValidation::describe(const GroupModel& model) const {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += ", ";
        out += v.describe(model);
    }
    return out;
}

MeasureValidation validate_measure(const GroupModel& model, const StepMeasure& m) {
    MeasureValidation report;
    int n = model.alphabet_size();
    if (static_cast<int>(m.prob.size()) != n)
        throw ValidationError("measure has " + std::to_string(m.prob.size()) +
                              " entries, alphabet has " + std::to_string(n));
    for (Letter a = 0; a < n; ++a) {
        if (m.prob[static_cast<std::size_t>(a)] <= 0.0)
            report.violations.push_back({MeasureViolation::Kind::ZeroMass, a, 0.0});
    }
    for (Letter a = 0; a < n; ++a) {
        Letter b = model.alphabet().inverse[static_cast<std::size_t>(a)];
        if (a < b) {
            bool sym;
            if (m.exact)
                sym = (*m.exact)[static_cast<std::size_t>(a)] == (*m.exact)[static_cast<std::size_t>(b)];
            else
                sym = std::abs(m.prob[static_cast<std::size_t>(a)] - m.prob[static_cast<std::size_t>(b)]) <=
                      1e-12 * std::max(1.0, std::abs(m.prob[static_cast<std::size_t>(a)]));
            if (!sym)
                report.violations.push_back({MeasureViolation::Kind::NotSymmetric, a, 0.0});
        }
    }
    if (m.exact) {
        Rational sum = 0;
        for (const auto& r : *m.exact) sum += r;
        if (sum != 1) {
            report.violations.push_back(
                {MeasureViolation::Kind::NotNormalized, -1, static_cast<double>(sum)});
        }
    } else {
        double sum = 0.0;
        for (double p : m.prob) sum += p;
        if (std::abs(sum - 1.0) > 1e-12)
            report.violations.push_back({MeasureViolation::Kind::NotNormalized, -1, sum});
    }
    return report;
}

MeasureCurve MeasureCurve::make(const GroupModel& model, StepMeasure base,
                                std::vector<double> tilt) {
    if (tilt.size() != base.prob.size())
        throw ValidationError("tilt size does not match alphabet");
    for (Letter a = 0; a < model.alphabet_size(); ++a) {
        Letter b = model.alphabet().inverse[static_cast<std::size_t>(a)];
        if (tilt[static_cast<std::size_t>(a)] != tilt[static_cast<std::size_t>(b)])
            throw ValidationError("tilt must satisfy phi(a^{-1}) = phi(a)");
    }
    MeasureCurve c;
    double mean = 0.0;
    for (std::size_t i = 0; i < tilt.size(); ++i) mean += tilt[i] * base.prob[i];
    c.nu.resize(tilt.size());
    for (std::size_t i = 0; i < tilt.size(); ++i) c.nu[i] = tilt[i] - mean;
    c.base = std::move(base);
    c.tilt = std::move(tilt);
    return c;
}

MeasureCurve MeasureCurve::make_exact(const GroupModel& model, StepMeasure base,
                                      std::vector<Rational> tilt) {
    std::vector<double> td;
    td.reserve(tilt.size());
    for (const auto& r : tilt) td.push_back(static_cast<double>(r));
    MeasureCurve c = make(model, base, td);
    if (c.base.exact) {
        Rational mean = 0;
        for (std::size_t i = 0; i < tilt.size(); ++i)
            mean += tilt[i] * (*c.base.exact)[i];
        std::vector<Rational> nu(tilt.size());
        for (std::size_t i = 0; i < tilt.size(); ++i) nu[i] = tilt[i] - mean;
        c.nu_exact = std::move(nu);
        // keep the float nu consistent with the exact one
        for (std::size_t i = 0; i < tilt.size(); ++i)
            c.nu[i] = static_cast<double>((*c.nu_exact)[i]);
    }
    return c;
}

double MeasureCurve::increment_variance() const {
    double v = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) v += nu[i] * nu[i] * base.prob[i];
    return v;
}

StepMeasure curve_at(const GroupModel& model, const MeasureCurve& curve, double lambda) {
    if (std::abs(lambda) > 1.0)
        throw InvalidLambda(lambda);
    if (lambda == 0.0) return curve.base;
    (void)model;
    std::vector<double> p(curve.base.prob.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = curve.base.prob[i] * std::exp(lambda * curve.tilt[i]);
        z += p[i];
    }
    for (auto& v : p) v /= z;
    return StepMeasure::from_doubles(std::move(p));
}

const std::vector<double>& curve_derivative(const MeasureCurve& curve) { return curve.nu; }

double log_ratio(const MeasureCurve& curve, double lambda, Letter a) {
    if (std::abs(lambda) > 1.0) throw InvalidLambda(lambda);
    if (lambda == 0.0) return 0.0;
    double z = 0.0;
    for (std::size_t i = 0; i < curve.tilt.size(); ++i)
        z += curve.base.prob[i] * std::exp(lambda * curve.tilt[i]);
    return lambda * curve.tilt[static_cast<std::size_t>(a)] - std::log(z);
}

std::vector<double> log_ratio_table(const MeasureCurve& curve, double lambda) {
    if (std::abs(lambda) > 1.0) throw InvalidLambda(lambda);
    std::vector<double> out(curve.tilt.size(), 0.0);
    if (lambda == 0.0) return out;
    double z = 0.0;
    for (std::size_t i = 0; i < curve.tilt.size(); ++i)
        z += curve.base.prob[i] * std::exp(lambda * curve.tilt[i]);
    double logz = std::log(z);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda * curve.tilt[i] - logz;
    return out;
}

}  // namespace hypwalk
