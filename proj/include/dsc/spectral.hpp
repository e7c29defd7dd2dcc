#pragma once

#include <Eigen/Dense>

#include <filesystem>

namespace dsc {

// Hankel matrix with entries (1-g)^(i+j-1) / (i+j-1), 1-based i, j.
struct HankelMatrix {
    int size = 0;
    double gamma = 0.0;
    Eigen::MatrixXd entries;
};

// Top eigenpairs of a HankelMatrix. Column j of `filters` is the unit
// eigenvector for eigenvalues(j); eigenvalues are sorted descending and
// clamped at zero (the matrix is PSD, negative values are roundoff).
//
// The same type backs both filter banks of the double spectral controller:
// the lifting bank (window m+1, count h+1) and the learning bank
// (window m~+1, count h~).
struct SpectralBasis {
    double gamma = 0.0;
    int window = 0;
    int count = 0;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd filters;  // window x count

    // sigma_j^(1/4), the weight applied to each projection.
    double weight(int j) const;
    Eigen::Ref<const Eigen::VectorXd> filter(int j) const { return filters.col(j); }
};

HankelMatrix build_hankel(int size, double gamma);

// Dense symmetric eigendecomposition. Sign convention: the first coordinate
// of each filter with magnitude above 1e-10 is positive.
SpectralBasis top_eigenpairs(const HankelMatrix& hankel, int k);

// build_hankel + top_eigenpairs.
SpectralBasis make_basis(int window, int count, double gamma);

// sigma_j^(1/4) * Y * phi_j for Y of shape p x window, columns newest-first.
Eigen::VectorXd project_window(const Eigen::MatrixXd& window, const SpectralBasis& basis, int j);

// Binary filter cache: "DSCB", u32 size, u32 count, f64 gamma, count f64
// eigenvalues, then count filters of `size` f64 each. Little-endian.
void save_basis(const SpectralBasis& basis, const std::filesystem::path& path);
SpectralBasis load_basis(const std::filesystem::path& path);

}  // namespace dsc
