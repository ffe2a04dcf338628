#include "ssep/lattice.hpp"

#include <cmath>

namespace ssep {

namespace {

// log of the Chernoff bound on P(Poisson(lambda) >= k), valid for k > lambda.
double log_poisson_upper_tail_bound(double lambda, int k) {
    if (lambda <= 0.0) return -std::numeric_limits<double>::infinity();
    const double kd = static_cast<double>(k);
    if (kd <= lambda) return 0.0;  // bound degenerates; caller must grow k
    return -lambda + kd * (1.0 + std::log(lambda / kd));
}

}  // namespace

WindowSpec build_window(double t_max, double tail_bound) {
    if (!(t_max >= 0.0))
        throw std::invalid_argument("build_window: t_max must be nonnegative");
    if (!(tail_bound > 0.0 && tail_bound < 1.0))
        throw std::invalid_argument("build_window: tail_bound must lie in (0, 1)");

    const double half_d = std::ceil(5.0 * t_max + 10.0 * std::sqrt(t_max) + 20.0);
    if (half_d > 5e7)
        throw std::runtime_error("build_window: window too large for t_max = " +
                                 std::to_string(t_max));
    int half = static_cast<int>(half_d);

    // Two boundaries; grow only if the caller asked for a tail below what
    // the light-cone margin already delivers.
    const double log_target = std::log(tail_bound) - std::log(2.0);
    while (log_poisson_upper_tail_bound(0.5 * t_max, half) > log_target) ++half;

    WindowSpec w;
    w.left = -half;
    w.right = half + 1;
    w.t_max = t_max;
    w.tail_bound = tail_bound;
    return w;
}

Configuration sample_initial(Density rho, const WindowSpec& window,
                             EventStream& stream, bool tag_origin) {
    Configuration config(window);
    const double p = rho.value();
    for (int site = window.left; site <= window.right; ++site)
        config.set(site, stream.uniform01() < p);
    if (tag_origin) config.set(0, true);
    return config;
}

}  // namespace ssep
