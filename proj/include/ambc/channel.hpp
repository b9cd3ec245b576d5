#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "config.hpp"
#include "rng.hpp"

namespace ambc
{

/// Time-domain multipath taps of the four link families.
///
/// Row m of a per-BD matrix belongs to BD m; column l is path l.
struct ChannelTapSet
{
    Eigen::MatrixXcd forward;      ///< FAP -> BD m, M x L_f
    Eigen::MatrixXcd backward;     ///< BD m -> FAP, M x L_g
    Eigen::VectorXcd direct;       ///< FAP -> LU, L_h
    Eigen::MatrixXcd interference; ///< BD m -> LU, M x L_v
};

/// Per-subcarrier responses; each row is the N-point transform of a tap row.
struct FrequencyGrid
{
    Eigen::MatrixXcd F; ///< M x N
    Eigen::MatrixXcd G; ///< M x N
    Eigen::VectorXcd H; ///< N
    Eigen::MatrixXcd V; ///< M x N

    Eigen::Index num_bds() const { return F.rows(); }
    Eigen::Index num_subcarriers() const { return F.cols(); }
};

enum class Link : std::uint64_t
{
    forward = 0,
    backward = 1,
    direct = 2,
    interference = 3
};

/// Expected power of path `l` on a link of length `distance`.
inline double path_power(const ScenarioConfig& cfg, double distance, std::size_t l)
{
    return cfg.first_path_gain / (distance * distance) * std::pow(cfg.decay, static_cast<double>(l));
}

namespace detail
{

inline Eigen::VectorXcd draw_link(const ScenarioConfig& cfg, std::uint64_t seed, Link link, std::uint64_t m,
                                  std::size_t paths, double distance)
{
    ComplexGaussian draw(derive_seed(seed, {static_cast<std::uint64_t>(link), m}));
    Eigen::VectorXcd taps(static_cast<Eigen::Index>(paths));
    for (std::size_t l = 0; l < paths; ++l)
        taps(static_cast<Eigen::Index>(l)) = draw(path_power(cfg, distance, l));
    return taps;
}

} // namespace detail

/// Draws one Rayleigh block-fading realization.
///
/// Every (link, BD) pair owns a stream seeded with derive_seed(seed, {link, m});
/// the direct link uses m = 0. Output is a pure function of (cfg, seed).
inline ChannelTapSet sample_taps(const ScenarioConfig& cfg, std::uint64_t seed)
{
    const auto M = static_cast<Eigen::Index>(cfg.num_bds);
    ChannelTapSet taps;
    taps.forward.resize(M, static_cast<Eigen::Index>(cfg.paths_forward));
    taps.backward.resize(M, static_cast<Eigen::Index>(cfg.paths_backward));
    taps.interference.resize(M, static_cast<Eigen::Index>(cfg.paths_interference));
    for (Eigen::Index m = 0; m < M; ++m) {
        const auto um = static_cast<std::uint64_t>(m);
        const auto sm = static_cast<std::size_t>(m);
        taps.forward.row(m) =
            detail::draw_link(cfg, seed, Link::forward, um, cfg.paths_forward, cfg.dist_fap_bd[sm]).transpose();
        taps.backward.row(m) =
            detail::draw_link(cfg, seed, Link::backward, um, cfg.paths_backward, cfg.dist_fap_bd[sm]).transpose();
        taps.interference.row(m) =
            detail::draw_link(cfg, seed, Link::interference, um, cfg.paths_interference, cfg.dist_bd_lu[sm])
                .transpose();
    }
    taps.direct = detail::draw_link(cfg, seed, Link::direct, 0, cfg.paths_direct, cfg.dist_fap_lu);
    return taps;
}

/// X_k = sum_l x_l exp(-j 2 pi k l / N) for k = 0..N-1.
inline Eigen::VectorXcd dft_of_taps(const Eigen::Ref<const Eigen::VectorXcd>& taps, Eigen::Index n)
{
    if (taps.size() > n)
        throw std::invalid_argument("path count exceeds the number of subcarriers");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (Eigen::Index l = 0; l < taps.size(); ++l) {
            // reduce k*l mod N first so the twiddle angle stays in [0, 2 pi)
            const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * l) % n) / static_cast<double>(n);
            acc += taps(l) * std::polar(1.0, phase);
        }
        out(k) = acc;
    }
    return out;
}

inline FrequencyGrid frequency_response(const ChannelTapSet& taps, std::size_t num_subcarriers)
{
    const auto n = static_cast<Eigen::Index>(num_subcarriers);
    const Eigen::Index M = taps.forward.rows();
    if (taps.backward.rows() != M || taps.interference.rows() != M)
        throw std::invalid_argument("tap sets disagree on the number of BDs");

    FrequencyGrid grid;
    grid.F.resize(M, n);
    grid.G.resize(M, n);
    grid.V.resize(M, n);
    for (Eigen::Index m = 0; m < M; ++m) {
        grid.F.row(m) = dft_of_taps(taps.forward.row(m).transpose(), n).transpose();
        grid.G.row(m) = dft_of_taps(taps.backward.row(m).transpose(), n).transpose();
        grid.V.row(m) = dft_of_taps(taps.interference.row(m).transpose(), n).transpose();
    }
    grid.H = dft_of_taps(taps.direct, n);
    return grid;
}

/// sigma^2 = P_bar * sum_l E|g_{1,l}|^2 E|f_{1,l}|^2 / 10^(snr_db/10), over BD 1's links.
inline double noise_power_from_snr(const ScenarioConfig& cfg)
{
    const double d = cfg.dist_fap_bd.at(0);
    double cascade = 0.0;
    // paths beyond the shorter of the two links contribute nothing to the product
    const std::size_t paths = std::min(cfg.paths_forward, cfg.paths_backward);
    for (std::size_t l = 0; l < paths; ++l)
        cascade += path_power(cfg, d, l) * path_power(cfg, d, l);
    return cfg.power_budget * cascade / std::pow(10.0, cfg.snr_db / 10.0);
}

inline double noise_variance(const ScenarioConfig& cfg)
{
    return cfg.noise_override ? *cfg.noise_override : noise_power_from_snr(cfg);
}

} // namespace ambc
