#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bmw::stat {

/// Dense symmetric positive-definite matrix, row-major. Dimensions here are
/// the number of analyses (rarely above 10), so no blocking or BLAS.
class SpdMatrix {
   public:
    /// Throws ContractError when entries.size() != dim*dim or the matrix is
    /// not symmetric to 1e-12 relative tolerance. Definiteness is checked
    /// later, during factorization.
    SpdMatrix(std::size_t dim, std::vector<double> entries);

    static SpdMatrix identity(std::size_t dim);

    std::size_t dim() const { return dim_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
    std::span<const double> entries() const { return entries_; }

   private:
    std::size_t dim_;
    std::vector<double> entries_;
};

/// Lower Cholesky factor L with A = L L^T.
class CholeskyFactor {
   public:
    /// Throws NumericError naming the first non-positive pivot.
    explicit CholeskyFactor(const SpdMatrix& a);

    std::size_t dim() const { return dim_; }
    double log_det() const { return log_det_; }

    /// Solves A x = b.
    std::vector<double> solve(std::span<const double> b) const;

    /// Returns L * u; maps i.i.d. standard normals to N(0, A) draws.
    void correlate(std::span<const double> u, std::span<double> out) const;

    double lower(std::size_t i, std::size_t j) const { return l_[i * dim_ + j]; }

   private:
    std::size_t dim_;
    std::vector<double> l_;
    double log_det_ = 0.0;
};

struct FactorAndLogDet {
    CholeskyFactor factor;
    double log_det;
};

FactorAndLogDet spd_factor_and_logdet(const SpdMatrix& a);

std::vector<double> spd_solve(const SpdMatrix& a, std::span<const double> b);

}  // namespace bmw::stat
