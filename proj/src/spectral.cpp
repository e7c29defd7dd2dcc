#include "dsc/spectral.hpp"

#include "dsc/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace dsc {

double SpectralBasis::weight(int j) const {
    return std::pow(eigenvalues(j), 0.25);
}

HankelMatrix build_hankel(int size, double gamma) {
    detail::require(size >= 1, "build_hankel: size must be positive, got " + std::to_string(size));
    detail::require(gamma > 0.0 && gamma < 1.0,
                    "build_hankel: gamma must lie in (0, 1), got " + std::to_string(gamma));

    HankelMatrix h{size, gamma, Eigen::MatrixXd(size, size)};
    const double base = 1.0 - gamma;
    // Entries depend only on i + j, so compute each anti-diagonal once and
    // write it to both triangles; the result is bit-symmetric.
    for (int s = 2; s <= 2 * size; ++s) {
        const int e = s - 1;
        const double v = std::pow(base, e) / e;
        for (int i = std::max(1, s - size); i <= std::min(size, s - 1); ++i) {
            h.entries(i - 1, s - i - 1) = v;
        }
    }
    return h;
}

SpectralBasis top_eigenpairs(const HankelMatrix& hankel, int k) {
    detail::require(k >= 1 && k <= hankel.size,
                    "top_eigenpairs: k must lie in [1, " + std::to_string(hankel.size) + "], got " +
                        std::to_string(k));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hankel.entries);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("top_eigenpairs: eigensolver did not converge (size " +
                             std::to_string(hankel.size) + ", gamma " + std::to_string(hankel.gamma) +
                             ", info " + std::to_string(static_cast<int>(solver.info())) + ")");
    }

    const int n = hankel.size;
    SpectralBasis basis;
    basis.gamma = hankel.gamma;
    basis.window = n;
    basis.count = k;
    basis.eigenvalues.resize(k);
    basis.filters.resize(n, k);
    // Eigen returns ascending order.
    for (int j = 0; j < k; ++j) {
        const int src = n - 1 - j;
        basis.eigenvalues(j) = std::max(0.0, solver.eigenvalues()(src));
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        for (int i = 0; i < n; ++i) {
            if (std::abs(v(i)) > 1e-10) {
                if (v(i) < 0) v = -v;
                break;
            }
        }
        basis.filters.col(j) = v;
    }
    return basis;
}

SpectralBasis make_basis(int window, int count, double gamma) {
    return top_eigenpairs(build_hankel(window, gamma), count);
}

Eigen::VectorXd project_window(const Eigen::MatrixXd& window, const SpectralBasis& basis, int j) {
    detail::require(window.cols() == basis.window,
                    "project_window: window has " + std::to_string(window.cols()) +
                        " columns, basis expects " + std::to_string(basis.window));
    detail::require(j >= 0 && j < basis.count, "project_window: filter index out of range");
    return basis.weight(j) * (window * basis.filters.col(j));
}

namespace {

constexpr std::array<char, 4> kMagic{'D', 'S', 'C', 'B'};

template <typename T>
void write_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw ParameterError("load_basis: truncated file " + path.string());
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void save_basis(const SpectralBasis& basis, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_basis: cannot open " + path.string());
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(basis.window));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(basis.count));
    write_le<double>(out, basis.gamma);
    for (int j = 0; j < basis.count; ++j) write_le<double>(out, basis.eigenvalues(j));
    for (int j = 0; j < basis.count; ++j) {
        for (int i = 0; i < basis.window; ++i) write_le<double>(out, basis.filters(i, j));
    }
    if (!out) throw std::runtime_error("save_basis: write failed for " + path.string());
}

SpectralBasis load_basis(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("load_basis: cannot open " + path.string());
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw ParameterError("load_basis: bad magic in " + path.string());

    SpectralBasis basis;
    basis.window = static_cast<int>(read_le<std::uint32_t>(in, path));
    basis.count = static_cast<int>(read_le<std::uint32_t>(in, path));
    basis.gamma = read_le<double>(in, path);
    if (basis.window < 1 || basis.count < 1 || basis.count > basis.window) {
        throw ParameterError("load_basis: inconsistent header in " + path.string());
    }
    basis.eigenvalues.resize(basis.count);
    basis.filters.resize(basis.window, basis.count);
    for (int j = 0; j < basis.count; ++j) basis.eigenvalues(j) = read_le<double>(in, path);
    for (int j = 0; j < basis.count; ++j) {
        for (int i = 0; i < basis.window; ++i) basis.filters(i, j) = read_le<double>(in, path);
    }
    return basis;
}

}  // namespace dsc
