#include "avgctl/linops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace avgctl {

Matrix expm(const Matrix& M, double t) {
    if (M.rows() != M.cols())
        throw DimensionError("expm: matrix must be square, got " + std::to_string(M.rows()) +
                             "x" + std::to_string(M.cols()));
    if (!std::isfinite(t)) throw DomainError("expm: time must be finite");

    const Eigen::Index m = M.rows();
    Matrix X = M * t;
    if (!X.allFinite()) throw DomainError("expm: non-finite entries in M*t");

    // infinity norm drives the squaring count
    double nrm = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) nrm = std::max(nrm, X.row(i).cwiseAbs().sum());

    int squarings = 0;
    if (nrm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
        X *= std::ldexp(1.0, -squarings);
    }

    // Taylor series to order 16; with ||X|| <= 1/2 the truncation tail is
    // below 1e-19, well under the 1e-12 contract.
    Matrix R = Matrix::Identity(m, m) + X;
    Matrix term = X;
    for (int k = 2; k <= 16; ++k) {
        term = (term * X) / static_cast<double>(k);
        R += term;
    }
    for (int i = 0; i < squarings; ++i) R = R * R;
    return R;
}

int kalman_rank(const Matrix& A, const Matrix& B) {
    if (A.rows() != A.cols())
        throw DimensionError("kalman_rank: A must be square");
    if (B.rows() != A.rows())
        throw DimensionError("kalman_rank: B has " + std::to_string(B.rows()) +
                             " rows, expected " + std::to_string(A.rows()));

    const Eigen::Index m = A.rows();
    const Eigen::Index k = B.cols();
    Matrix ctrb(m, m * k);
    Matrix P = B;
    for (Eigen::Index j = 0; j < m; ++j) {
        ctrb.middleCols(j * k, k) = P;
        P = A * P;
    }

    Eigen::JacobiSVD<Matrix> svd(ctrb);
    const auto& sigma = svd.singularValues();
    if (sigma.size() == 0) return 0;
    const double thresh =
        static_cast<double>(std::max(m, m * k)) * sigma(0) * 1e-12;
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > thresh) ++rank;
    return rank;
}

double spectral_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

namespace {

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNodes[5] = {
    0.14887433898163121088482600112972,
    0.43339539412924719079926594316578,
    0.67940956829902440623432736511487,
    0.86506336668898451073209668842349,
    0.97390652851717172007796401208445,
};
constexpr double kGlWeights[5] = {
    0.29552422471475287017389299465134,
    0.26926671930999635509122692156947,
    0.21908636251598204399553493422816,
    0.14945134915058059314577633965770,
    0.06667134430868813759356880989334,
};

Matrix gramian_quadrature(const Matrix& A, const Matrix& B, double tau) {
    const Eigen::Index m = A.rows();
    const Matrix Q = B * B.transpose();
    auto integrand = [&](double s) {
        Matrix E = expm(A, -s);
        return Matrix(E * Q * E.transpose());
    };

    Matrix prev = Matrix::Zero(m, m);
    for (int panels = 2; panels <= 512; panels *= 2) {
        Matrix W = Matrix::Zero(m, m);
        const double h = tau / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = (p + 0.5) * h;
            const double half = 0.5 * h;
            for (int q = 0; q < 5; ++q) {
                W += (kGlWeights[q] * half) * integrand(mid - half * kGlNodes[q]);
                W += (kGlWeights[q] * half) * integrand(mid + half * kGlNodes[q]);
            }
        }
        if (panels > 2 && (W - prev).norm() <= 1e-13 * std::max(1.0, W.norm())) return W;
        prev = W;
    }
    return prev;
}

}  // namespace

Gramian gramian(const Matrix& A, const Matrix& B, double tau) {
    if (A.rows() != A.cols()) throw DimensionError("gramian: A must be square");
    if (B.rows() != A.rows()) throw DimensionError("gramian: incompatible B");
    if (!(tau > 0.0)) throw DomainError("gramian: tau must be > 0");

    const Eigen::Index m = A.rows();

    // Route 1: exponential of the block matrix [[A, BB^T], [0, -A^T]];
    // with F = e^{H tau}, W = F22^T * F12.
    Matrix H = Matrix::Zero(2 * m, 2 * m);
    H.topLeftCorner(m, m) = A;
    H.topRightCorner(m, m) = B * B.transpose();
    H.bottomRightCorner(m, m) = -A.transpose();
    Matrix F = expm(H, tau);
    Matrix W_block = F.bottomRightCorner(m, m).transpose() * F.topRightCorner(m, m);

    // Route 2: adaptive composite quadrature of the integrand itself.
    Matrix W_quad = gramian_quadrature(A, B, tau);

    const double denom = std::max(W_block.norm(), W_quad.norm());
    const double diff = (W_block - W_quad).norm();
    if (denom > 0.0 && diff > 1e-10 * denom)
        throw NumericalFailure("gramian: dual computation disagrees, relative error " +
                               std::to_string(diff / denom));

    Gramian out;
    out.tau = tau;
    out.W = 0.5 * (W_block + W_block.transpose());

    Eigen::JacobiSVD<Matrix> svd(out.W);
    const auto& sigma = svd.singularValues();
    const double smax = sigma(0);
    const double smin = sigma(sigma.size() - 1);
    out.cond_estimate =
        (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
    if (smax == 0.0) out.cond_estimate = std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace avgctl
