#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dgrpo {

enum class ReweightFamily { none, linear, inverse, exponential, steep_exponential, quadratic };

std::string_view to_string(ReweightFamily family);
std::optional<ReweightFamily> parse_family(std::string_view name);

/// Parameters of an accuracy-to-weight map w = f(p). `a` and `b` are the lower
/// and upper weight bounds; `x0` is the midpoint (or vertex) accuracy; the linear
/// ramp runs between `xlow` and `xhigh`; `k` controls steepness.
struct ReweightConfig {
    ReweightFamily family = ReweightFamily::none;
    double a = 1.0;
    double b = 1.0;
    double x0 = 0.5;
    double xlow = 0.0;
    double xhigh = 1.0;
    double k = 0.0;

    /// Default hyper-parameters for `family` (flat weight 1 for `none`).
    static ReweightConfig defaults(ReweightFamily family);

    /// Throws ConfigError when the parameters violate the family's constraints.
    void validate() const;

    bool operator==(const ReweightConfig&) const = default;
};

/// Adaptive advantage weight for group accuracy `p_tilde` in [0, 1].
/// Output lies in [a, b] for every family; `none` returns exactly 1.
double weight(double p_tilde, const ReweightConfig& cfg);

} // namespace dgrpo
