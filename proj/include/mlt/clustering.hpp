#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mlt/affinity.hpp"
#include "mlt/parallel.hpp"
#include "mlt/rng.hpp"

namespace mlt {

/// A total labeling of the feature tracks into k clusters plus its cost.
struct ClusterAssignment {
    std::vector<int> labels;  // track index -> cluster id in [0, k)
    int k{0};
    double objective{0.0};
};

/// One scored proposal of the (k, run) grid, for the sweep report.
struct KSweepEntry {
    int k{0};
    int run{0};
    std::uint64_t seed{0};
    double objective{0.0};
};

/// Quadratic clustering cost: the diagonal plus twice every co-clustered
/// off-diagonal entry. Lower is better; co-clustering pairs with negative
/// cost is rewarded.
inline double score(const std::vector<int>& labels, const CostMatrix& q) {
    const int f = static_cast<int>(q.Q.rows());
    if (static_cast<int>(labels.size()) != f)
        throw std::invalid_argument("score: labeling does not cover all tracks");
    double s = 0.0;
    for (int i = 0; i < f; ++i) s += q.Q(i, i);
    for (int i = 0; i < f; ++i)
        for (int j = i + 1; j < f; ++j)
            if (labels[i] == labels[j]) s += 2.0 * q.Q(i, j);
    return s;
}

namespace detail {

/// Lloyd iterations with greedy k-means++ seeding. Empty clusters are
/// reseeded at the point farthest from its current center. Deterministic
/// given the RNG state.
inline std::vector<int> kmeans(const Eigen::MatrixXd& pts, int k, Rng& rng) {
    const int n = static_cast<int>(pts.rows());
    const int d = static_cast<int>(pts.cols());
    Eigen::MatrixXd centers(k, d);
    centers.row(0) = pts.row(static_cast<int>(rng.uniform_index(n)));
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        for (int i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], (pts.row(i) - centers.row(c - 1)).squaredNorm());
        centers.row(c) = pts.row(static_cast<int>(rng.weighted_index(min_d2)));
    }

    std::vector<int> label(n, 0);
    auto assign = [&]() {
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d2 = (pts.row(i) - centers.row(c)).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = c;
                }
            }
            label[i] = best;
        }
    };
    for (int iter = 0; iter < 100; ++iter) {
        assign();
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
        std::vector<int> count(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(label[i]) += pts.row(i);
            ++count[label[i]];
        }
        double moved = 0.0;
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd next;
            if (count[c] == 0) {
                int far = 0;
                double far_d2 = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d2 = (pts.row(i) - centers.row(label[i])).squaredNorm();
                    if (d2 > far_d2) {
                        far_d2 = d2;
                        far = i;
                    }
                }
                next = pts.row(far);
            } else {
                next = sums.row(c) / static_cast<double>(count[c]);
            }
            moved = std::max(moved, (next - centers.row(c)).squaredNorm());
            centers.row(c) = next;
        }
        if (moved <= 1e-8) break;
    }
    assign();
    return label;
}

/// First k eigenvectors of the symmetric-normalized Laplacian, row-normalized.
inline Eigen::MatrixXd embed_rows(const Eigen::MatrixXd& eigenvectors, int k) {
    Eigen::MatrixXd u = eigenvectors.leftCols(k);
    for (int i = 0; i < u.rows(); ++i) {
        const double norm = u.row(i).norm();
        if (norm > 0.0) u.row(i) /= norm;
    }
    return u;
}

inline Eigen::MatrixXd laplacian_eigenvectors(const Eigen::MatrixXd& w) {
    const int f = static_cast<int>(w.rows());
    Eigen::VectorXd deg = w.rowwise().sum();
    for (int i = 0; i < f; ++i)
        if (deg(i) <= 0.0) deg(i) = 1.0;  // isolated row: self-degree
    const Eigen::VectorXd dinv = deg.array().rsqrt();
    const Eigen::MatrixXd l =
        Eigen::MatrixXd::Identity(f, f) - dinv.asDiagonal() * w * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectral_partition: eigensolver failed to converge on a " +
                                 std::to_string(f) + "x" + std::to_string(f) + " Laplacian");
    return es.eigenvectors();
}

}  // namespace detail

/// Seeded normalized-cuts proposal: spectral embedding of the affinity
/// matrix discretized by k-means. Deterministic given (W, k, seed).
inline std::vector<int> spectral_partition(const AffinityMatrix& w, int k, std::uint64_t seed) {
    const int f = w.size();
    if (k < 1) throw std::invalid_argument("spectral_partition: k must be >= 1");
    if (k > f) throw std::invalid_argument("spectral_partition: k exceeds the track count");
    const Eigen::MatrixXd u = detail::embed_rows(detail::laplacian_eigenvectors(w.W), k);
    Rng rng(seed);
    return detail::kmeans(u, k, rng);
}

namespace detail {

/// Scores seeded proposals for every k in [k_lo, k_hi] and returns the global
/// argmin; ties prefer smaller k, then smaller seed. The grid is evaluated in
/// parallel but reduced in a fixed order, so the result is thread-agnostic.
inline ClusterAssignment sweep_clusterings(const AffinityMatrix& w, const CostMatrix& q, int k_lo,
                                           int k_hi, const TrackerConfig& cfg, int threads,
                                           std::vector<KSweepEntry>* grid_out) {
    const Eigen::MatrixXd vecs = laplacian_eigenvectors(w.W);
    struct Job {
        int k;
        int run;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int k = k_lo; k <= k_hi; ++k)
        for (int run = 0; run < cfg.ncut_runs; ++run)
            jobs.push_back({k, run, cfg.seed + static_cast<std::uint64_t>(run)});

    std::vector<std::vector<int>> labels(jobs.size());
    std::vector<double> objective(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t idx) {
        const Job& job = jobs[idx];
        Rng rng(job.seed);
        labels[idx] = kmeans(embed_rows(vecs, job.k), job.k, rng);
        objective[idx] = score(labels[idx], q);
    });

    ClusterAssignment best;
    best.objective = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
        if (objective[idx] < best.objective) {
            best.objective = objective[idx];
            best.labels = labels[idx];
            best.k = jobs[idx].k;
        }
        if (grid_out) grid_out->push_back({jobs[idx].k, jobs[idx].run, jobs[idx].seed, objective[idx]});
    }
    return best;
}

}  // namespace detail

/// Full proposal sweep: k ranges over a window of half-width
/// k_sweep_halfwidth centered on the detection-track count (clamped to
/// [1, F]), with ncut_runs seeded proposals per k.
inline ClusterAssignment select_clustering(const AffinityMatrix& w, const CostMatrix& q,
                                           const TrackerConfig& cfg, int threads = 0,
                                           std::vector<KSweepEntry>* grid_out = nullptr) {
    const int f = w.size();
    if (f == 0) return {};
    if (q.Q.rows() != f) throw std::invalid_argument("select_clustering: W and Q size mismatch");
    const int n_det = w.n_mid();
    const int k_lo = std::max(1, n_det - cfg.k_sweep_halfwidth);
    const int k_hi = std::min(f, n_det + cfg.k_sweep_halfwidth);
    return detail::sweep_clusterings(w, q, k_lo, std::max(k_lo, k_hi), cfg, threads, grid_out);
}

/// Sweep restricted to one forced k (all ncut_runs proposals at that k).
inline ClusterAssignment select_clustering_at(const AffinityMatrix& w, const CostMatrix& q, int k,
                                              const TrackerConfig& cfg, int threads = 0) {
    const int f = w.size();
    if (k < 1 || k > f) throw std::invalid_argument("select_clustering_at: k out of range");
    if (q.Q.rows() != f) throw std::invalid_argument("select_clustering_at: W and Q size mismatch");
    return detail::sweep_clusterings(w, q, k, k, cfg, threads, nullptr);
}

/// Exhaustive reference: enumerates every set partition (restricted growth
/// strings) and returns the cheapest labeling. Refuses more than 10 tracks.
inline ClusterAssignment oracle_best_partition(const CostMatrix& q) {
    const int f = static_cast<int>(q.Q.rows());
    if (f > 10)
        throw std::invalid_argument("oracle_best_partition: instance too large (max 10 tracks)");
    ClusterAssignment best;
    if (f == 0) return best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<int> labels(f, 0);
    auto recurse = [&](auto&& self, int i, int used) -> void {
        if (i == f) {
            const double s = score(labels, q);
            if (s < best.objective) {
                best.objective = s;
                best.labels = labels;
                best.k = used;
            }
            return;
        }
        for (int c = 0; c <= used; ++c) {
            labels[i] = c;
            self(self, i + 1, std::max(used, c + 1));
        }
    };
    recurse(recurse, 0, 0);
    return best;
}

/// Totality/atomicity check of an assignment over n_tracks feature tracks.
struct ConstraintReport {
    bool pass{true};
    std::vector<int> violations;  // track indices without a valid label
    std::string message;
};

inline ConstraintReport validate_constraints(const ClusterAssignment& a, int n_tracks) {
    ConstraintReport r;
    for (int i = 0; i < n_tracks; ++i) {
        const bool missing = i >= static_cast<int>(a.labels.size());
        if (missing || a.labels[i] < 0 || a.labels[i] >= std::max(a.k, 1)) r.violations.push_back(i);
    }
    if (static_cast<int>(a.labels.size()) > n_tracks)
        for (int i = n_tracks; i < static_cast<int>(a.labels.size()); ++i) r.violations.push_back(i);
    if (!r.violations.empty()) {
        r.pass = false;
        r.message = "track " + std::to_string(r.violations.front()) +
                    (r.violations.size() > 1 ? " (and others)" : "") + " lacks a valid cluster label";
    }
    return r;
}

}  // namespace mlt
