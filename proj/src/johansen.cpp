#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"
#include "regimekit/var.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace regimekit::var {

namespace {

using Row = std::array<double, 11>;

struct Table {
    Row p10, p05, p01;
    int rows;
};

// Osterwald-Lenum type tables indexed by k - r = 1..11.
constexpr Table kTraceConstant{{6.5, 15.66, 28.71, 45.23, 66.49, 85.18, 118.99, 151.38, 186.54, 226.34, 269.53},
                               {8.18, 17.95, 31.52, 48.28, 70.6, 90.39, 124.25, 157.11, 192.84, 232.49, 277.39},
                               {11.65, 23.52, 37.22, 55.43, 78.87, 104.2, 136.06, 168.92, 204.79, 246.27, 292.65},
                               11};
constexpr Table kMaxConstant{{6.5, 12.91, 18.9, 24.78, 30.84, 36.25, 42.06, 48.43, 54.01, 59.0, 65.07},
                             {8.18, 14.9, 21.07, 27.14, 33.32, 39.43, 44.91, 51.07, 57.0, 62.42, 68.27},
                             {11.65, 19.19, 25.75, 32.14, 38.78, 44.59, 51.3, 57.07, 63.37, 68.61, 74.36},
                             11};
constexpr Table kTraceRestricted{{7.52, 17.85, 32.0, 49.65, 71.86, 97.18, 126.58, 159.48, 196.37, 236.54, 282.45},
                                 {9.24, 19.96, 34.91, 53.12, 76.07, 102.14, 131.7, 165.58, 202.92, 244.15, 291.4},
                                 {12.97, 24.6, 41.07, 60.16, 84.45, 111.01, 143.09, 177.2, 215.74, 257.68, 307.64},
                                 11};
constexpr Table kMaxRestricted{{7.52, 13.75, 19.77, 25.56, 31.66, 37.45, 43.25, 48.91, 54.35, 60.25, 66.02},
                               {9.24, 15.67, 22.0, 28.14, 34.4, 40.3, 46.45, 52.0, 57.42, 63.57, 69.74},
                               {12.97, 20.2, 26.81, 33.24, 39.79, 46.82, 51.91, 57.95, 63.71, 69.94, 76.63},
                               11};
constexpr Table kTraceNone{{2.86, 10.47, 21.63, 36.58, 54.44}, {3.84, 12.53, 24.31, 39.89, 59.46},
                           {6.51, 16.31, 29.75, 45.58, 66.52}, 5};
constexpr Table kMaxNone{{2.86, 9.52, 15.59, 21.58, 27.62}, {3.84, 11.44, 17.89, 23.80, 30.04},
                         {6.51, 15.69, 22.99, 28.82, 35.17}, 5};

JohansenCriticalValues lookup(const Table& t, int dim) {
    if (dim < 1 || dim > t.rows)
        throw Error("no Johansen critical values tabulated for k - r = " + std::to_string(dim));
    const auto i = static_cast<std::size_t>(dim - 1);
    return {t.p10[i], t.p05[i], t.p01[i]};
}

Eigen::MatrixXd partial_out(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
    if (z.cols() == 0) return y;
    return y - z * z.colPivHouseholderQr().solve(y);
}

}  // namespace

std::string to_string(JohansenDeterministic d) {
    switch (d) {
        case JohansenDeterministic::None: return "none";
        case JohansenDeterministic::ConstantInRelation: return "constant-in-ce";
        case JohansenDeterministic::Constant: return "constant";
    }
    return "constant";
}

JohansenDeterministic johansen_deterministic_from_string(std::string_view s) {
    if (s == "none") return JohansenDeterministic::None;
    if (s == "constant-in-ce" || s == "restricted") return JohansenDeterministic::ConstantInRelation;
    if (s == "constant" || s == "constant-in-data") return JohansenDeterministic::Constant;
    throw Error("unknown Johansen deterministic specification '" + std::string(s) + "'");
}

JohansenCriticalValues johansen_trace_critical(JohansenDeterministic d, int dim) {
    switch (d) {
        case JohansenDeterministic::None: return lookup(kTraceNone, dim);
        case JohansenDeterministic::ConstantInRelation: return lookup(kTraceRestricted, dim);
        case JohansenDeterministic::Constant: return lookup(kTraceConstant, dim);
    }
    return lookup(kTraceConstant, dim);
}

JohansenCriticalValues johansen_max_eigen_critical(JohansenDeterministic d, int dim) {
    switch (d) {
        case JohansenDeterministic::None: return lookup(kMaxNone, dim);
        case JohansenDeterministic::ConstantInRelation: return lookup(kMaxRestricted, dim);
        case JohansenDeterministic::Constant: return lookup(kMaxConstant, dim);
    }
    return lookup(kMaxConstant, dim);
}

JohansenResult johansen_test(const Eigen::MatrixXd& x, int p, JohansenDeterministic det) {
    const Eigen::Index k = x.cols();
    const Eigen::Index T = x.rows();
    if (k < 2) throw Error("johansen: need at least two series");
    if (p < 1) throw Error("johansen: VAR order must be at least 1");
    if (T <= k * p + 20) throw Error("johansen: sample too short (need T > k*p + 20)");

    const Eigen::MatrixXd dx = x.bottomRows(T - 1) - x.topRows(T - 1);  // dx.row(t-1) = x_t - x_{t-1}
    const Eigen::Index n = T - p;                                         // dependent rows t = p..T-1

    Eigen::MatrixXd z0 = dx.bottomRows(n);
    const bool restricted = det == JohansenDeterministic::ConstantInRelation;
    Eigen::MatrixXd z1(n, k + (restricted ? 1 : 0));
    z1.leftCols(k) = x.middleRows(p - 1, n);
    if (restricted) z1.col(k).setOnes();
    const Eigen::Index short_cols = k * (p - 1) + (det == JohansenDeterministic::Constant ? 1 : 0);
    Eigen::MatrixXd z2(n, short_cols);
    for (int i = 1; i < p; ++i) z2.middleCols((i - 1) * k, k) = dx.middleRows(p - 1 - i, n);
    if (det == JohansenDeterministic::Constant) z2.col(short_cols - 1).setOnes();

    const Eigen::MatrixXd r0 = partial_out(z0, z2);
    const Eigen::MatrixXd r1 = partial_out(z1, z2);
    const double dn = static_cast<double>(n);
    const Eigen::MatrixXd s00 = r0.transpose() * r0 / dn;
    const Eigen::MatrixXd s11 = r1.transpose() * r1 / dn;
    const Eigen::MatrixXd s01 = r0.transpose() * r1 / dn;

    Eigen::LLT<Eigen::MatrixXd> l11(s11), l00(s00);
    if (l11.info() != Eigen::Success || l00.info() != Eigen::Success)
        throw NumericalError("johansen: singular moment matrices");
    const Eigen::MatrixXd L = l11.matrixL();
    // M = L^-1 S10 S00^-1 S01 L^-T is symmetric with the eigenvalues of S11^-1 S10 S00^-1 S01.
    const Eigen::MatrixXd a = L.triangularView<Eigen::Lower>().solve(s01.transpose());
    Eigen::MatrixXd m = a * l00.solve(a.transpose());
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("johansen: eigenproblem failed");
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), std::greater<>());

    JohansenResult r;
    r.deterministic = det;
    r.lags = p;
    r.sample_size = static_cast<long>(n);
    r.eigenvalues.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) r.eigenvalues(i) = std::clamp(ev[static_cast<std::size_t>(i)], 0.0, 1.0 - 1e-15);

    r.selected_rank = static_cast<int>(k);
    for (int rank = 0; rank < k; ++rank) {
        JohansenRankRow row;
        row.rank = rank;
        double trace = 0.0;
        for (Eigen::Index i = rank; i < k; ++i) trace -= dn * std::log1p(-r.eigenvalues(i));
        row.trace_statistic = trace;
        row.max_eigen_statistic = -dn * std::log1p(-r.eigenvalues(rank));
        row.trace_critical = johansen_trace_critical(det, static_cast<int>(k) - rank);
        row.max_eigen_critical = johansen_max_eigen_critical(det, static_cast<int>(k) - rank);
        if (r.selected_rank == k && row.trace_statistic <= row.trace_critical.p05) r.selected_rank = rank;
        r.ranks.push_back(row);
    }
    return r;
}

JohansenResult johansen_test(const TimeSeries& data, int p, JohansenDeterministic det) {
    return johansen_test(data.values(), p, det);
}

}  // namespace regimekit::var
