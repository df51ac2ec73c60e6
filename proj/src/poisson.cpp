#include "pflow/poisson.hpp"

#include "pflow/fft2.hpp"

#include <cmath>
#include <mutex>
#include <vector>

namespace pflow {

namespace {

// Cache of kernel transforms keyed by grid layout and kernel type; Euler/NS
// stepping re-solves on one fixed grid, so this removes a third of the FFT work.
struct KernelCache {
    struct Entry {
        int nx, ny;
        double h;
        size_t tag;
        CMatrix khat;
    };
    std::mutex m;
    std::vector<Entry> entries;

    CMatrix* find(int nx, int ny, double h, size_t tag) {
        for (auto& e : entries)
            if (e.nx == nx && e.ny == ny && e.h == h && e.tag == tag) return &e.khat;
        return nullptr;
    }
    void insert(int nx, int ny, double h, size_t tag, CMatrix khat) {
        if (entries.size() > 8) entries.clear();
        entries.push_back({nx, ny, h, tag, std::move(khat)});
    }
};
KernelCache g_kernel_cache;

} // namespace

bool supported_in_inner_half(const ScalarField& f, double tol) {
    const Grid& g = f.grid;
    const double cutoff = tol * f.v.abs().maxCoeff();
    const int mx = g.nx / 4, my = g.ny / 4;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (i >= mx && i < g.nx - mx && j >= my && j < g.ny - my) continue;
            if (std::abs(f(i, j)) > cutoff) return false;
        }
    return true;
}

ScalarField poisson_periodic(const ScalarField& rhs) {
    const Grid& g = rhs.grid;
    if (g.boundary != Boundary::periodic)
        throw std::invalid_argument("poisson_periodic: grid must be periodic");
    const double scale = rhs.v.abs().maxCoeff();
    if (std::abs(rhs.v.mean()) > 1e-12 * (scale > 0 ? scale : 1.0))
        throw std::invalid_argument("poisson_periodic: rhs must have zero mean");

    CMatrix a(g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) a(i, j) = rhs(i, j);
    fft2(a);

    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int j = 0; j < g.ny; ++j) {
        const double cy = std::cos(2.0 * kPi * j / g.ny);
        for (int i = 0; i < g.nx; ++i) {
            const double cx = std::cos(2.0 * kPi * i / g.nx);
            const double lam = (2.0 * cx + 2.0 * cy - 4.0) * inv_h2;
            if (i == 0 && j == 0)
                a(i, j) = 0.0; // mean-zero gauge
            else
                a(i, j) /= lam;
        }
    }
    ifft2(a);

    ScalarField phi(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) phi(i, j) = a(i, j).real();
    return phi;
}

ArrayXd freespace_convolve(const Grid& g, const ArrayXd& rhs,
                           const std::function<double(double, double)>& kernel) {
    const int Nx = 2 * g.nx, Ny = 2 * g.ny;

    // The cache key uses the closure type, not its captures: kernels of one type
    // on one grid layout must evaluate identically (true for all callers here).
    const size_t tag = kernel.target_type().hash_code();
    CMatrix khat;
    {
        std::lock_guard<std::mutex> lock(g_kernel_cache.m);
        if (CMatrix* hit = g_kernel_cache.find(g.nx, g.ny, g.h, tag)) {
            khat = *hit;
        } else {
            CMatrix k(Nx, Ny);
            for (int q = 0; q < Ny; ++q) {
                const int dy = (q <= g.ny) ? q : q - Ny;
                for (int p = 0; p < Nx; ++p) {
                    const int dx = (p <= g.nx) ? p : p - Nx;
                    k(p, q) = kernel(dx * g.h, dy * g.h);
                }
            }
            fft2(k);
            khat = k;
            g_kernel_cache.insert(g.nx, g.ny, g.h, tag, khat);
        }
    }

    CMatrix a = CMatrix::Zero(Nx, Ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) a(i, j) = rhs[g.idx(i, j)];
    fft2(a);
    a = a.cwiseProduct(khat);
    ifft2(a);

    ArrayXd out(g.size());
    const double w = g.h * g.h;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out[g.idx(i, j)] = a(i, j).real() * w;
    return out;
}

double log_kernel_self_value(double h) {
    const double c0 = kPi / 4.0 - 0.5 * std::log(2.0) - 1.5;
    return (std::log(h) + c0) / (2.0 * kPi);
}

ScalarField poisson_freespace(const ScalarField& rhs) {
    const Grid& g = rhs.grid;
    if (!supported_in_inner_half(rhs))
        throw std::invalid_argument("poisson_freespace: rhs not supported in inner half of the box");

    const double self = log_kernel_self_value(g.h);
    auto kernel = [self](double dx, double dy) {
        const double r2 = dx * dx + dy * dy;
        if (r2 == 0.0) return self;
        return 0.25 * std::log(r2) / kPi;
    };
    return ScalarField(g, freespace_convolve(g, rhs.v, kernel));
}

} // namespace pflow
