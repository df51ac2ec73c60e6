#include "pflow/fft2.hpp"

#include <unsupported/Eigen/FFT>

namespace pflow {

namespace {

// One FFT engine per direction; kissfft caches its twiddle tables per length inside.
void pass_columns(Eigen::FFT<double>& fft, CMatrix& a, bool inverse) {
    Eigen::VectorXcd col(a.rows()), out(a.rows());
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        col = a.col(c);
        if (inverse)
            fft.inv(out, col);
        else
            fft.fwd(out, col);
        a.col(c) = out;
    }
}

void pass_rows(Eigen::FFT<double>& fft, CMatrix& a, bool inverse) {
    Eigen::VectorXcd row(a.cols()), out(a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        row = a.row(r);
        if (inverse)
            fft.inv(out, row);
        else
            fft.fwd(out, row);
        a.row(r) = out;
    }
}

} // namespace

void fft2(CMatrix& a) {
    Eigen::FFT<double> fft;
    pass_columns(fft, a, false);
    pass_rows(fft, a, false);
}

void ifft2(CMatrix& a) {
    Eigen::FFT<double> fft;
    pass_columns(fft, a, true);
    pass_rows(fft, a, true);
}

} // namespace pflow
