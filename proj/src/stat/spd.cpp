#include "bmw/stat/spd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmw/errors.hpp"

namespace bmw::stat {

SpdMatrix::SpdMatrix(std::size_t dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
    if (dim_ == 0) throw ContractError("SpdMatrix: dimension must be positive");
    if (entries_.size() != dim_ * dim_)
        throw ContractError("SpdMatrix: expected " + std::to_string(dim_ * dim_) + " entries, got " +
                            std::to_string(entries_.size()));
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = i + 1; j < dim_; ++j) {
            const double a = entries_[i * dim_ + j];
            const double b = entries_[j * dim_ + i];
            const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
            if (!(std::fabs(a - b) <= 1e-12 * scale))
                throw ContractError("SpdMatrix: not symmetric at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
        }
    }
}

SpdMatrix SpdMatrix::identity(std::size_t dim) {
    std::vector<double> e(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = 1.0;
    return SpdMatrix(dim, std::move(e));
}

CholeskyFactor::CholeskyFactor(const SpdMatrix& a) : dim_(a.dim()), l_(a.dim() * a.dim(), 0.0) {
    for (std::size_t j = 0; j < dim_; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l_[j * dim_ + k] * l_[j * dim_ + k];
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw NumericError("matrix is not positive definite: pivot " + std::to_string(j) +
                               " is " + std::to_string(diag));
        const double ljj = std::sqrt(diag);
        l_[j * dim_ + j] = ljj;
        log_det_ += 2.0 * std::log(ljj);
        for (std::size_t i = j + 1; i < dim_; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l_[i * dim_ + k] * l_[j * dim_ + k];
            l_[i * dim_ + j] = s / ljj;
        }
    }
}

std::vector<double> CholeskyFactor::solve(std::span<const double> b) const {
    if (b.size() != dim_) throw ContractError("CholeskyFactor::solve: dimension mismatch");
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l_[i * dim_ + k] * x[k];
        x[i] = s / l_[i * dim_ + i];
    }
    for (std::size_t ii = dim_; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < dim_; ++k) s -= l_[k * dim_ + ii] * x[k];
        x[ii] = s / l_[ii * dim_ + ii];
    }
    return x;
}

void CholeskyFactor::correlate(std::span<const double> u, std::span<double> out) const {
    if (u.size() != dim_ || out.size() != dim_)
        throw ContractError("CholeskyFactor::correlate: dimension mismatch");
    for (std::size_t i = dim_; i-- > 0;) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += l_[i * dim_ + k] * u[k];
        out[i] = s;
    }
}

FactorAndLogDet spd_factor_and_logdet(const SpdMatrix& a) {
    CholeskyFactor f(a);
    const double ld = f.log_det();
    return {std::move(f), ld};
}

std::vector<double> spd_solve(const SpdMatrix& a, std::span<const double> b) {
    if (b.size() != a.dim()) throw ContractError("spd_solve: dimension mismatch");
    return CholeskyFactor(a).solve(b);
}

}  // namespace bmw::stat
