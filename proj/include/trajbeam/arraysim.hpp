// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef TRAJBEAM_ARRAYSIM_HPP
#define TRAJBEAM_ARRAYSIM_HPP

#include "trajbeam/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace trajbeam
{
    using cdouble = std::complex<double>;

    // Sentinel for a beam pair that captures no energy at all.
    inline constexpr double kSnrFloor = -std::numeric_limits<double>::infinity();

    inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

    // Unit-norm ULA response with half-wavelength element spacing.
    class SteeringVector
    {
    public:
        SteeringVector() = default;
        explicit SteeringVector(Eigen::VectorXcd elements) : elements_(std::move(elements)) {}

        const Eigen::VectorXcd &elements() const { return elements_; }
        std::size_t size() const { return static_cast<std::size_t>(elements_.size()); }
        cdouble operator[](std::size_t m) const { return elements_(static_cast<Eigen::Index>(m)); }

        // <this, other> = this^H * other
        cdouble inner(const SteeringVector &other) const { return elements_.dot(other.elements_); }
        double norm() const { return elements_.norm(); }

    private:
        Eigen::VectorXcd elements_;
    };

    // One propagation path. Angles are azimuths in the ULA range (-pi/2, pi/2].
    struct PathComponent
    {
        cdouble gain{0.0, 0.0};
        double aod_rad = 0.0;
        double aoa_rad = 0.0;
    };

    // N_UE x N_BS narrowband channel.
    class ChannelMatrix
    {
    public:
        ChannelMatrix() = default;
        explicit ChannelMatrix(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {}

        static ChannelMatrix zero(std::size_t n_bs, std::size_t n_ue)
        {
            return ChannelMatrix(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n_ue), static_cast<Eigen::Index>(n_bs)));
        }

        const Eigen::MatrixXcd &entries() const { return entries_; }
        std::size_t n_ue() const { return static_cast<std::size_t>(entries_.rows()); }
        std::size_t n_bs() const { return static_cast<std::size_t>(entries_.cols()); }

    private:
        Eigen::MatrixXcd entries_;
    };

    inline bool angle_in_ula_range(double angle_rad)
    {
        constexpr double half_pi = std::numbers::pi / 2.0;
        return std::isfinite(angle_rad) && angle_rad > -half_pi - 1e-12 && angle_rad <= half_pi + 1e-12;
    }

    // (1/sqrt(n)) [1, e^{j pi sin(phi)}, ..., e^{j (n-1) pi sin(phi)}]
    inline SteeringVector array_response(double angle_rad, std::size_t n)
    {
        detail::require(n >= 1, "array_response: element count must be >= 1");
        detail::require(std::isfinite(angle_rad), "array_response: angle must be finite");
        const double step = std::numbers::pi * std::sin(angle_rad);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
        for (std::size_t m = 0; m < n; ++m)
            v(static_cast<Eigen::Index>(m)) = std::polar(scale, step * static_cast<double>(m));
        return SteeringVector(std::move(v));
    }

    // sqrt(n_bs n_ue / L) sum_l h_l a_UE(aoa_l) a_BS(aod_l)^H
    inline ChannelMatrix make_channel(std::span<const PathComponent> paths, std::size_t n_bs, std::size_t n_ue)
    {
        detail::require(!paths.empty(), "make_channel: path list is empty (use ChannelMatrix::zero for a blocked link)");
        detail::require(n_bs >= 1 && n_ue >= 1, "make_channel: antenna counts must be >= 1");
        const double prefactor = std::sqrt(static_cast<double>(n_bs * n_ue) / static_cast<double>(paths.size()));
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n_ue), static_cast<Eigen::Index>(n_bs));
        for (const auto &p : paths)
        {
            detail::require(angle_in_ula_range(p.aod_rad) && angle_in_ula_range(p.aoa_rad),
                            "make_channel: path angle outside (-pi/2, pi/2]");
            const auto a_ue = array_response(p.aoa_rad, n_ue);
            const auto a_bs = array_response(p.aod_rad, n_bs);
            h.noalias() += p.gain * (a_ue.elements() * a_bs.elements().adjoint());
        }
        return ChannelMatrix(prefactor * h);
    }

    inline double snr_db(const ChannelMatrix &h, const SteeringVector &f, const SteeringVector &w, double p_dbm, double noise_dbm)
    {
        detail::require(f.size() == h.n_bs() && w.size() == h.n_ue(), "snr_db: beam dimensions do not match the channel");
        const cdouble y = w.elements().dot(h.entries() * f.elements());
        const double gain = std::norm(y);
        if (gain == 0.0)
            return kSnrFloor;
        return p_dbm - noise_dbm + 10.0 * std::log10(gain);
    }

    // Beams steered on a grid that is uniform in sin(phi).
    class Codebook
    {
    public:
        Codebook() = default;
        Codebook(std::size_t n, std::vector<double> angles) : n_(n), angles_(std::move(angles))
        {
            beams_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(angles_.size()));
            sines_.reserve(angles_.size());
            for (std::size_t k = 0; k < angles_.size(); ++k)
            {
                beams_.col(static_cast<Eigen::Index>(k)) = array_response(angles_[k], n).elements();
                sines_.push_back(std::sin(angles_[k]));
            }
        }

        std::size_t size() const { return angles_.size(); }
        std::size_t elements() const { return n_; }
        double angle(std::size_t k) const { return angles_.at(k); }
        double sine(std::size_t k) const { return sines_.at(k); }
        const std::vector<double> &angles() const { return angles_; }
        const std::vector<double> &sines() const { return sines_; }
        SteeringVector beam(std::size_t k) const { return SteeringVector(beams_.col(static_cast<Eigen::Index>(k))); }
        // n x size, one beam per column
        const Eigen::MatrixXcd &matrix() const { return beams_; }

    private:
        std::size_t n_ = 0;
        std::vector<double> angles_;
        std::vector<double> sines_;
        Eigen::MatrixXcd beams_;
    };

    // Grid sine of beam k in a codebook of `size` beams.
    inline double dft_grid_sine(std::size_t k, std::size_t size)
    {
        const double s = static_cast<double>(size);
        return 2.0 * static_cast<double>(k) / s - 1.0 + 1.0 / s;
    }

    inline Codebook dft_codebook(std::size_t n, std::size_t size)
    {
        detail::require(size >= 1, "dft_codebook: size must be >= 1");
        detail::require(n >= 1, "dft_codebook: element count must be >= 1");
        std::vector<double> angles(size);
        for (std::size_t k = 0; k < size; ++k)
            angles[k] = std::asin(dft_grid_sine(k, size));
        return Codebook(n, std::move(angles));
    }

    struct BeamPairResult
    {
        std::size_t f_index = 0;
        std::size_t w_index = 0;
        double snr_db = kSnrFloor;
        std::size_t evaluations = 0;
    };

    // Sweeps every (f, w) pair. Ties go to the lexicographically smallest
    // (f_index, w_index).
    inline BeamPairResult best_pair_exhaustive(const ChannelMatrix &h, const Codebook &f_book, const Codebook &w_book,
                                               double p_dbm, double noise_dbm)
    {
        detail::require(f_book.size() >= 1 && w_book.size() >= 1, "best_pair_exhaustive: empty codebook");
        detail::require(f_book.elements() == h.n_bs() && w_book.elements() == h.n_ue(),
                        "best_pair_exhaustive: codebook dimensions do not match the channel");
        // gains(w, f) = |w^H H f|^2
        const Eigen::MatrixXcd projected = w_book.matrix().adjoint() * h.entries() * f_book.matrix();
        BeamPairResult best;
        double best_gain = 0.0;
        for (Eigen::Index f = 0; f < projected.cols(); ++f)
            for (Eigen::Index w = 0; w < projected.rows(); ++w)
            {
                const double g = std::norm(projected(w, f));
                if (g > best_gain)
                {
                    best_gain = g;
                    best.f_index = static_cast<std::size_t>(f);
                    best.w_index = static_cast<std::size_t>(w);
                }
            }
        best.evaluations = f_book.size() * w_book.size();
        best.snr_db = best_gain > 0.0 ? snr_db(h, f_book.beam(best.f_index), w_book.beam(best.w_index), p_dbm, noise_dbm)
                                      : kSnrFloor;
        return best;
    }
}

#endif
