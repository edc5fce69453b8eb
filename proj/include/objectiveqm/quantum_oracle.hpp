// Copyright 2026 The objectiveqm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file    quantum_oracle.hpp
 * @brief   Dense small-dimension Hilbert space calculator: density states,
 *          observables given by spectral data, Born probabilities and
 *          two-party correlation functions.
 *
 * Observables are never diagonalized here. They are built from closed-form
 * spectral data (eigenvalue, projector) and every construction is validated
 * against an absolute tolerance of 1e-12.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "objectiveqm/error.hpp"

namespace objectiveqm {

using complex = std::complex<double>;

inline constexpr double kOracleTolerance = 1e-12;

/// Square dense complex matrix, row-major.
class ComplexMatrix {
   public:
    ComplexMatrix() = default;

    explicit ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, complex(0.0, 0.0)) {
        require(dim > 0, ErrorKind::InvalidInput, "matrix dimension must be positive");
    }

    ComplexMatrix(std::size_t dim, std::vector<complex> entries) : dim_(dim), data_(std::move(entries)) {
        require(dim > 0, ErrorKind::InvalidInput, "matrix dimension must be positive");
        require(data_.size() == dim * dim, ErrorKind::InvalidInput, "matrix is not square");
        for (const auto &z : data_) {
            require(std::isfinite(z.real()) && std::isfinite(z.imag()), ErrorKind::InvalidInput,
                    "matrix entries must be finite");
        }
    }

    static ComplexMatrix identity(std::size_t dim) {
        ComplexMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    static ComplexMatrix diagonal(std::span<const double> values) {
        ComplexMatrix m(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            m(i, i) = values[i];
        }
        return m;
    }

    std::size_t dim() const noexcept {
        return dim_;
    }

    complex &operator()(std::size_t row, std::size_t col) {
        return data_[row * dim_ + col];
    }
    const complex &operator()(std::size_t row, std::size_t col) const {
        return data_[row * dim_ + col];
    }

    std::span<const complex> entries() const noexcept {
        return data_;
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix out(dim_);
        for (std::size_t r = 0; r < dim_; ++r) {
            for (std::size_t c = 0; c < dim_; ++c) {
                out(c, r) = std::conj((*this)(r, c));
            }
        }
        return out;
    }

    complex trace() const {
        complex t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            t += (*this)(i, i);
        }
        return t;
    }

    ComplexMatrix &operator+=(const ComplexMatrix &other) {
        check_same_dim(other);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] += other.data_[k];
        }
        return *this;
    }

    ComplexMatrix &operator-=(const ComplexMatrix &other) {
        check_same_dim(other);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] -= other.data_[k];
        }
        return *this;
    }

    ComplexMatrix &operator*=(complex scalar) {
        for (auto &z : data_) {
            z *= scalar;
        }
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix &rhs) {
        lhs += rhs;
        return lhs;
    }
    friend ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix &rhs) {
        lhs -= rhs;
        return lhs;
    }
    friend ComplexMatrix operator*(complex scalar, ComplexMatrix m) {
        m *= scalar;
        return m;
    }

    friend ComplexMatrix operator*(const ComplexMatrix &lhs, const ComplexMatrix &rhs) {
        lhs.check_same_dim(rhs);
        const std::size_t n = lhs.dim_;
        ComplexMatrix out(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < n; ++k) {
                const complex a = lhs(r, k);
                if (a == complex(0.0, 0.0)) {
                    continue;
                }
                for (std::size_t c = 0; c < n; ++c) {
                    out(r, c) += a * rhs(k, c);
                }
            }
        }
        return out;
    }

    /// Largest entrywise modulus of (this - other).
    double max_abs_diff(const ComplexMatrix &other) const {
        check_same_dim(other);
        double worst = 0.0;
        for (std::size_t k = 0; k < data_.size(); ++k) {
            worst = std::max(worst, std::abs(data_[k] - other.data_[k]));
        }
        return worst;
    }

    bool is_hermitian(double tol = kOracleTolerance) const {
        for (std::size_t r = 0; r < dim_; ++r) {
            for (std::size_t c = r; c < dim_; ++c) {
                if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol) {
                    return false;
                }
            }
        }
        return true;
    }

    friend bool operator==(const ComplexMatrix &, const ComplexMatrix &) = default;

   private:
    void check_same_dim(const ComplexMatrix &other) const {
        require(dim_ == other.dim_, ErrorKind::InvalidInput, "matrix dimension mismatch");
    }

    std::size_t dim_ = 0;
    std::vector<complex> data_;
};

/// Kronecker product lhs ⊗ rhs.
inline ComplexMatrix kron(const ComplexMatrix &lhs, const ComplexMatrix &rhs) {
    const std::size_t n = lhs.dim();
    const std::size_t m = rhs.dim();
    ComplexMatrix out(n * m);
    for (std::size_t r1 = 0; r1 < n; ++r1) {
        for (std::size_t c1 = 0; c1 < n; ++c1) {
            const complex a = lhs(r1, c1);
            for (std::size_t r2 = 0; r2 < m; ++r2) {
                for (std::size_t c2 = 0; c2 < m; ++c2) {
                    out(r1 * m + r2, c1 * m + c2) = a * rhs(r2, c2);
                }
            }
        }
    }
    return out;
}

/// Cholesky attempt on m + tol·I. Succeeds iff m is positive semidefinite up to tol.
inline bool is_positive_semidefinite(const ComplexMatrix &m, double tol = kOracleTolerance) {
    const std::size_t n = m.dim();
    ComplexMatrix l(n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m(j, j).real() + tol;
        for (std::size_t k = 0; k < j; ++k) {
            diag -= std::norm(l(j, k));
        }
        if (diag < 0.0) {
            return false;
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            complex s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= l(i, k) * std::conj(l(j, k));
            }
            l(i, j) = ljj > 0.0 ? s / ljj : complex(0.0, 0.0);
        }
    }
    return true;
}

/// Trace-one Hermitian positive semidefinite operator.
class DensityState {
   public:
    /// Validates Hermiticity, unit trace and positivity.
    static DensityState from_matrix(ComplexMatrix rho) {
        require(rho.is_hermitian(kOracleTolerance), ErrorKind::InvalidInput, "density matrix is not Hermitian");
        const complex tr = rho.trace();
        require(std::abs(tr.real() - 1.0) <= kOracleTolerance && std::abs(tr.imag()) <= kOracleTolerance,
                ErrorKind::InvalidInput, "density matrix trace is not 1");
        require(is_positive_semidefinite(rho, 1e-10), ErrorKind::InvalidInput,
                "density matrix is not positive semidefinite");
        return DensityState(std::move(rho));
    }

    std::size_t dim() const noexcept {
        return rho_.dim();
    }
    const ComplexMatrix &matrix() const noexcept {
        return rho_;
    }

   private:
    explicit DensityState(ComplexMatrix rho) : rho_(std::move(rho)) {
    }

    ComplexMatrix rho_;
};

struct SpectralBranch {
    double eigenvalue = 0.0;
    ComplexMatrix projector;
};

/// Observable with finite spectrum, given by its spectral decomposition.
class SpectralObservable {
   public:
    SpectralObservable(std::string label, std::vector<SpectralBranch> branches)
        : label_(std::move(label)), branches_(std::move(branches)) {
        require(!branches_.empty(), ErrorKind::InvalidInput, "observable needs at least one branch");
        const std::size_t dim = branches_.front().projector.dim();
        ComplexMatrix total(dim);
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            const auto &p = branches_[i].projector;
            require(p.dim() == dim, ErrorKind::InvalidInput, "projector dimensions differ in " + label_);
            require(std::isfinite(branches_[i].eigenvalue), ErrorKind::InvalidInput, "eigenvalue must be finite");
            require(p.is_hermitian(kOracleTolerance), ErrorKind::InvalidInput,
                    "projector is not Hermitian in " + label_);
            require((p * p).max_abs_diff(p) <= kOracleTolerance, ErrorKind::InvalidInput,
                    "projector is not idempotent in " + label_);
            for (std::size_t j = 0; j < i; ++j) {
                require(branches_[i].eigenvalue != branches_[j].eigenvalue, ErrorKind::InvalidInput,
                        "repeated eigenvalue in " + label_);
                require((p * branches_[j].projector).max_abs_diff(ComplexMatrix(dim)) <= kOracleTolerance,
                        ErrorKind::InvalidInput, "projectors are not orthogonal in " + label_);
            }
            total += p;
        }
        require(total.max_abs_diff(ComplexMatrix::identity(dim)) <= kOracleTolerance, ErrorKind::InvalidInput,
                "projectors do not sum to identity in " + label_);
    }

    const std::string &label() const noexcept {
        return label_;
    }
    std::size_t dim() const noexcept {
        return branches_.front().projector.dim();
    }
    std::span<const SpectralBranch> branches() const noexcept {
        return branches_;
    }

    std::vector<double> spectrum() const {
        std::vector<double> out;
        out.reserve(branches_.size());
        for (const auto &b : branches_) {
            out.push_back(b.eigenvalue);
        }
        return out;
    }

    bool has_eigenvalue(double value) const {
        return std::any_of(branches_.begin(), branches_.end(),
                           [value](const SpectralBranch &b) { return b.eigenvalue == value; });
    }

    /// Spectrum exactly {+1, -1}.
    bool is_dichotomic() const {
        return branches_.size() == 2 && has_eigenvalue(1.0) && has_eigenvalue(-1.0);
    }

   private:
    std::string label_;
    std::vector<SpectralBranch> branches_;
};

/// Finite outcome subset Δ of Λ₀. Members are kept sorted and unique.
struct OutcomeSet {
    std::vector<double> members;
    bool contains_a0 = false;

    OutcomeSet() = default;
    OutcomeSet(std::vector<double> values, bool with_a0 = false) : members(std::move(values)), contains_a0(with_a0) {
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
    }

    bool contains(double value) const {
        return std::binary_search(members.begin(), members.end(), value);
    }

    friend bool operator==(const OutcomeSet &, const OutcomeSet &) = default;
};

inline DensityState make_pure(std::span<const complex> amplitudes) {
    require(!amplitudes.empty(), ErrorKind::InvalidInput, "empty amplitude vector");
    double norm2 = 0.0;
    for (const auto &a : amplitudes) {
        require(std::isfinite(a.real()) && std::isfinite(a.imag()), ErrorKind::InvalidInput,
                "amplitudes must be finite");
        norm2 += std::norm(a);
    }
    require(norm2 > 0.0, ErrorKind::InvalidInput, "zero amplitude vector");
    const std::size_t n = amplitudes.size();
    ComplexMatrix rho(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            rho(r, c) = amplitudes[r] * std::conj(amplitudes[c]) / norm2;
        }
    }
    return DensityState::from_matrix(std::move(rho));
}

inline DensityState make_pure(std::initializer_list<complex> amplitudes) {
    return make_pure(std::span<const complex>(amplitudes.begin(), amplitudes.size()));
}

struct MixtureComponent {
    double weight = 0.0;
    DensityState state;
};

inline DensityState mix(std::span<const MixtureComponent> components) {
    require(!components.empty(), ErrorKind::InvalidInput, "empty mixture");
    const std::size_t dim = components.front().state.dim();
    double total_weight = 0.0;
    ComplexMatrix rho(dim);
    for (const auto &c : components) {
        require(c.weight >= 0.0 && std::isfinite(c.weight), ErrorKind::InvalidInput,
                "mixture weights must be nonnegative");
        require(c.state.dim() == dim, ErrorKind::InvalidInput, "mixture components differ in dimension");
        total_weight += c.weight;
        rho += complex(c.weight, 0.0) * c.state.matrix();
    }
    require(std::abs(total_weight - 1.0) <= kOracleTolerance, ErrorKind::InvalidInput,
            "mixture weights do not sum to 1");
    return DensityState::from_matrix(std::move(rho));
}

inline DensityState mix(std::initializer_list<MixtureComponent> components) {
    return mix(std::span<const MixtureComponent>(components.begin(), components.size()));
}

inline std::array<ComplexMatrix, 3> pauli_matrices() {
    const complex i(0.0, 1.0);
    return {ComplexMatrix(2, {0.0, 1.0, 1.0, 0.0}), ComplexMatrix(2, {0.0, -i, i, 0.0}),
            ComplexMatrix(2, {1.0, 0.0, 0.0, -1.0})};
}

/// Qubit spin along a unit direction: eigenvalues +1, -1 with projectors (I ± n·σ)/2.
inline SpectralObservable spin_observable(std::array<double, 3> direction, std::string label) {
    const double norm = std::sqrt(direction[0] * direction[0] + direction[1] * direction[1] +
                                  direction[2] * direction[2]);
    require(std::isfinite(norm) && std::abs(norm - 1.0) <= 1e-9, ErrorKind::InvalidInput,
            "spin direction must be a unit vector");
    const auto sigma = pauli_matrices();
    ComplexMatrix n_sigma(2);
    for (std::size_t k = 0; k < 3; ++k) {
        n_sigma += complex(direction[k] / norm, 0.0) * sigma[k];
    }
    const ComplexMatrix id = ComplexMatrix::identity(2);
    std::vector<SpectralBranch> branches;
    branches.push_back({1.0, complex(0.5, 0.0) * (id + n_sigma)});
    branches.push_back({-1.0, complex(0.5, 0.0) * (id - n_sigma)});
    return SpectralObservable(std::move(label), std::move(branches));
}

/// Unit direction in the x-z plane at the given polar angle.
inline std::array<double, 3> planar_direction(double angle) {
    return {std::sin(angle), 0.0, std::cos(angle)};
}

/// Trivial observable with the single eigenvalue 1 (projector I).
inline SpectralObservable identity_observable(std::size_t dim, std::string label = "I") {
    std::vector<SpectralBranch> branches;
    branches.push_back({1.0, ComplexMatrix::identity(dim)});
    return SpectralObservable(std::move(label), std::move(branches));
}

inline double combine_product(double a, double b) {
    return a * b;
}
inline double combine_sum(double a, double b) {
    return a + b;
}

/// Observable on the product space whose branch for (a, b) has projector Π_a ⊗ Π_b and
/// eigenvalue combiner(a, b). Branches with equal combined value are merged.
template <typename Combiner>
SpectralObservable tensor_product_observable(const SpectralObservable &lhs, const SpectralObservable &rhs,
                                             Combiner &&combiner, std::string label = {}) {
    std::vector<SpectralBranch> branches;
    for (const auto &a : lhs.branches()) {
        for (const auto &b : rhs.branches()) {
            const double value = combiner(a.eigenvalue, b.eigenvalue);
            ComplexMatrix projector = kron(a.projector, b.projector);
            auto it = std::find_if(branches.begin(), branches.end(),
                                   [value](const SpectralBranch &br) { return br.eigenvalue == value; });
            if (it == branches.end()) {
                branches.push_back({value, std::move(projector)});
            } else {
                it->projector += projector;
            }
        }
    }
    if (label.empty()) {
        label = lhs.label() + "*" + rhs.label();
    }
    return SpectralObservable(std::move(label), std::move(branches));
}

/// Tr(ρ Σ_{a∈Δ} Π_a). The no-registration outcome has no quantum counterpart.
inline double born_probability(const DensityState &rho, const SpectralObservable &obs, const OutcomeSet &delta) {
    require(!delta.contains_a0, ErrorKind::DomainError,
            "outcome sets containing the no-registration outcome have no quantum counterpart");
    require(rho.dim() == obs.dim(), ErrorKind::InvalidInput, "state and observable dimensions differ");
    for (double v : delta.members) {
        require(obs.has_eigenvalue(v), ErrorKind::InvalidInput,
                "outcome " + std::to_string(v) + " is not in the spectrum of " + obs.label());
    }
    const ComplexMatrix &m = rho.matrix();
    const std::size_t n = m.dim();
    double p = 0.0;
    for (const auto &branch : obs.branches()) {
        if (!delta.contains(branch.eigenvalue)) {
            continue;
        }
        // Tr(ρΠ) = Σ_{r,c} ρ(r,c) Π(c,r)
        complex t = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                t += m(r, c) * branch.projector(c, r);
            }
        }
        p += t.real();
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Σ_{a,b} a·b·P(a, b) for dichotomic observables on the two tensor factors.
inline double correlation(const DensityState &rho, const SpectralObservable &lhs, const SpectralObservable &rhs) {
    require(lhs.is_dichotomic() && rhs.is_dichotomic(), ErrorKind::DomainError,
            "correlation needs dichotomic (+1/-1) observables");
    require(rho.dim() == lhs.dim() * rhs.dim(), ErrorKind::InvalidInput,
            "state dimension does not match the observable pair");
    // Injective on {±1}²: keeps the four joint outcomes as separate branches.
    const auto joint = tensor_product_observable(lhs, rhs, [](double a, double b) { return 4.0 * a + b; });
    double e = 0.0;
    for (double a : {1.0, -1.0}) {
        for (double b : {1.0, -1.0}) {
            e += a * b * born_probability(rho, joint, OutcomeSet({4.0 * a + b}));
        }
    }
    return std::clamp(e, -1.0, 1.0);
}

/// ρ_A ⊗ ρ_B.
inline DensityState product_state(const DensityState &lhs, const DensityState &rhs) {
    return DensityState::from_matrix(kron(lhs.matrix(), rhs.matrix()));
}

/// (|01> - |10>)/√2.
inline DensityState singlet_state() {
    const double h = 1.0 / std::sqrt(2.0);
    return make_pure({0.0, h, -h, 0.0});
}

}  // namespace objectiveqm
