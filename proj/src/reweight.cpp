#include "dgrpo/reweight.hpp"

#include "dgrpo/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace dgrpo {

namespace {

constexpr std::array<std::pair<ReweightFamily, std::string_view>, 6> kFamilyNames{{
    {ReweightFamily::none, "none"},
    {ReweightFamily::linear, "linear"},
    {ReweightFamily::inverse, "inverse"},
    {ReweightFamily::exponential, "exponential"},
    {ReweightFamily::steep_exponential, "steep_exponential"},
    {ReweightFamily::quadratic, "quadratic"},
}};

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

} // namespace

std::string_view to_string(ReweightFamily family) {
    for (const auto& [f, name] : kFamilyNames)
        if (f == family) return name;
    return "unknown";
}

std::optional<ReweightFamily> parse_family(std::string_view name) {
    for (const auto& [f, n] : kFamilyNames)
        if (n == name) return f;
    return std::nullopt;
}

ReweightConfig ReweightConfig::defaults(ReweightFamily family) {
    ReweightConfig c;
    c.family = family;
    switch (family) {
    case ReweightFamily::none:
        break;
    case ReweightFamily::linear:
        c.a = 0.4; c.b = 1.5; c.xlow = 0.50; c.xhigh = 1.00;
        break;
    case ReweightFamily::inverse:
        c.a = 0.4; c.b = 0.7; c.x0 = 0.80; c.k = 1.0;
        break;
    case ReweightFamily::exponential:
        c.a = 0.4; c.b = 1.5; c.x0 = 0.75; c.k = 10.0;
        break;
    case ReweightFamily::steep_exponential:
        c.a = 0.3; c.b = 2.2; c.x0 = 0.65; c.k = 10.0;
        break;
    case ReweightFamily::quadratic:
        c.a = 0.4; c.b = 1.6; c.x0 = 0.10; c.k = 2.0;
        break;
    }
    return c;
}

void ReweightConfig::validate() const {
    if (family == ReweightFamily::none) return;
    const std::string tag{to_string(family)};
    if (!(std::isfinite(a) && std::isfinite(b) && a > 0.0 && a <= b))
        throw ConfigError("reweight." + tag + ": requires 0 < a <= b");
    if (!(std::isfinite(k) && k >= 0.0))
        throw ConfigError("reweight." + tag + ": requires k >= 0");
    if (family == ReweightFamily::linear) {
        if (!(in_unit(xlow) && in_unit(xhigh) && xlow < xhigh))
            throw ConfigError("reweight.linear: requires 0 <= xlow < xhigh <= 1");
        return;
    }
    if (!in_unit(x0))
        throw ConfigError("reweight." + tag + ": requires 0 <= x0 <= 1");
    // The hyperbola's pole must stay left of p = 0.
    if (family == ReweightFamily::inverse && !(1.0 - k * x0 > 0.0))
        throw ConfigError("reweight.inverse: requires 1 - k*x0 > 0");
}

double weight(double p_tilde, const ReweightConfig& cfg) {
    if (!(p_tilde >= 0.0 && p_tilde <= 1.0))
        throw DomainError("weight: accuracy must lie in [0, 1], got " + std::to_string(p_tilde));
    cfg.validate();

    const double a = cfg.a;
    const double b = cfg.b;
    switch (cfg.family) {
    case ReweightFamily::none:
        return 1.0;
    case ReweightFamily::linear:
        if (p_tilde <= cfg.xlow) return b;
        if (p_tilde >= cfg.xhigh) return a;
        return a + (b - a) / (cfg.xhigh - cfg.xlow) * (cfg.xhigh - p_tilde);
    case ReweightFamily::inverse:
        return std::clamp(a + (b - a) / (1.0 + cfg.k * (p_tilde - cfg.x0)), a, b);
    case ReweightFamily::exponential:
        return a + (b - a) / (1.0 + std::exp(cfg.k * (p_tilde - cfg.x0)));
    case ReweightFamily::steep_exponential: {
        const double e = std::exp(-cfg.k * (p_tilde - cfg.x0));
        if (std::isinf(e)) return b;
        return a + (b - a) * e / (1.0 + e);
    }
    case ReweightFamily::quadratic: {
        const double dx = p_tilde - cfg.x0;
        return std::clamp(b - cfg.k * dx * dx, a, b);
    }
    }
    return 1.0;
}

} // namespace dgrpo
