#include "qcoder/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "qcoder/errors.hpp"
#include "qcoder/rng.hpp"

namespace qcoder {

namespace {

Eigen::MatrixXd to_eigen(const RowMatrix& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r, c);
    return out;
}

RowMatrix from_eigen(const Eigen::MatrixXd& m) {
    RowMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
    return out;
}

double euclidean(const RowMatrix& m, std::size_t r1, std::size_t r2) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
        double d = m.at(r1, c) - m.at(r2, c);
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace

std::vector<double> normalize(const std::vector<double>& v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq <= 0.0) {
        throw PreconditionError("cannot normalize a zero vector");
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
    return out;
}

EmbeddingVector normalize(const EmbeddingVector& v) {
    return EmbeddingVector{v.model_id, v.dims, normalize(v.values)};
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw PreconditionError("cosine similarity requires equal dims");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        throw PreconditionError("cosine similarity undefined for zero vectors");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_similarity(a.values, b.values);
}

PcaResult pca_fit_transform(const RowMatrix& matrix, double target) {
    if (matrix.rows < 2) {
        throw PreconditionError("pca requires at least 2 rows");
    }
    if (!(target > 0.0 && target <= 1.0)) {
        throw PreconditionError("pca variance target must be in (0, 1]");
    }
    Eigen::MatrixXd x = to_eigen(matrix);
    Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sigma = svd.singularValues();

    double denom = static_cast<double>(matrix.rows - 1);
    std::vector<double> eigenvalues(static_cast<std::size_t>(sigma.size()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        eigenvalues[static_cast<std::size_t>(i)] = sigma(i) * sigma(i) / denom;
        total += eigenvalues[static_cast<std::size_t>(i)];
    }
    if (total <= 1e-12) {
        throw PreconditionError("pca degenerate input: all rows identical");
    }

    int d = 0;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        cumulative += eigenvalues[i];
        d = static_cast<int>(i + 1);
        if (cumulative / total >= target - 1e-12) break;
    }

    PcaResult result;
    result.dims = d;
    result.explained = cumulative / total;
    Eigen::MatrixXd projected = x * svd.matrixV().leftCols(d);
    result.projected = from_eigen(projected);
    return result;
}

namespace {

// Smooth calibration of per-point kernel widths so each point's fuzzy
// neighborhood has effective size log2(k).
double smooth_knn_sigma(const std::vector<double>& dists, double rho, double target) {
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
        double sum = 0.0;
        for (double d : dists) {
            double shifted = d - rho;
            sum += shifted <= 0.0 ? 1.0 : std::exp(-shifted / mid);
        }
        if (std::abs(sum - target) < 1e-5) break;
        if (sum > target) {
            hi = mid;
            mid = (lo + hi) / 2.0;
        } else {
            lo = mid;
            mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
        }
    }
    return std::max(mid, 1e-10);
}

struct GraphEdge {
    std::size_t from;
    std::size_t to;
    double weight;
};

}  // namespace

NeighborEmbedResult neighbor_embed(const RowMatrix& input, int dims, std::uint64_t seed) {
    const std::size_t n = input.rows;
    NeighborEmbedResult result;

    if (n < static_cast<std::size_t>(dims) + 2) {
        // Too few rows for a neighbor graph; truncate (or zero-pad) columns.
        result.used_fallback = true;
        result.coords = RowMatrix(n, static_cast<std::size_t>(dims));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < static_cast<std::size_t>(dims); ++c)
                result.coords.at(r, c) = c < input.cols ? input.at(r, c) : 0.0;
        return result;
    }

    const int n_neighbors = std::min(15, static_cast<int>(n) - 1);
    result.n_neighbors = n_neighbors;

    // Exact kNN by Euclidean distance.
    std::vector<std::vector<std::pair<double, std::size_t>>> knn(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> dists;
        dists.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dists.emplace_back(euclidean(input, i, j), j);
        }
        std::partial_sort(dists.begin(), dists.begin() + n_neighbors, dists.end());
        dists.resize(static_cast<std::size_t>(n_neighbors));
        knn[i] = std::move(dists);
    }

    // Fuzzy membership weights, then union-symmetrize.
    std::vector<std::vector<std::pair<std::size_t, double>>> directed(n);
    const double target = std::log2(static_cast<double>(n_neighbors));
    for (std::size_t i = 0; i < n; ++i) {
        double rho = knn[i].front().first;
        std::vector<double> ds;
        ds.reserve(knn[i].size());
        for (const auto& [d, j] : knn[i]) ds.push_back(d);
        double sigma = smooth_knn_sigma(ds, rho, target);
        for (const auto& [d, j] : knn[i]) {
            double shifted = d - rho;
            double w = shifted <= 0.0 ? 1.0 : std::exp(-shifted / sigma);
            directed[i].emplace_back(j, w);
        }
    }
    std::vector<GraphEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, w_ij] : directed[i]) {
            if (j < i) continue;  // handle each unordered pair once
            double w_ji = 0.0;
            for (const auto& [k, w] : directed[j]) {
                if (k == i) {
                    w_ji = w;
                    break;
                }
            }
            double w = w_ij + w_ji - w_ij * w_ji;
            if (w > 1e-8) edges.push_back(GraphEdge{i, j, w});
        }
    }

    // Deterministic PCA initialization scaled into a small box.
    Eigen::MatrixXd x = to_eigen(input);
    Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    int init_cols = std::min<int>(dims, static_cast<int>(svd.matrixV().cols()));
    Eigen::MatrixXd init = x * svd.matrixV().leftCols(init_cols);
    Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), dims);
    coords.leftCols(init_cols) = init;
    double max_abs = coords.cwiseAbs().maxCoeff();
    if (max_abs > 0.0) coords *= 10.0 / max_abs;

    // SGD layout optimization; curve parameters for min_dist 0.1.
    const double a = 1.577;
    const double b = 0.8951;
    const int epochs = 200;
    const int negative_samples = 5;
    result.epochs = epochs;
    std::mt19937_64 rng(seed);

    auto clip = [](double g) { return std::clamp(g, -4.0, 4.0); };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        double alpha = 1.0 - static_cast<double>(epoch) / epochs;
        for (const auto& edge : edges) {
            Eigen::Index i = static_cast<Eigen::Index>(edge.from);
            Eigen::Index j = static_cast<Eigen::Index>(edge.to);
            Eigen::RowVectorXd diff = coords.row(i) - coords.row(j);
            double dist_sq = diff.squaredNorm();
            if (dist_sq > 0.0) {
                double grad_coeff = -2.0 * a * b * std::pow(dist_sq, b - 1.0) /
                                    (1.0 + a * std::pow(dist_sq, b));
                for (int c = 0; c < dims; ++c) {
                    double g = clip(grad_coeff * diff(c)) * edge.weight * alpha;
                    coords(i, c) += g;
                    coords(j, c) -= g;
                }
            }
            for (int s = 0; s < negative_samples; ++s) {
                std::size_t k = static_cast<std::size_t>(rng_below(rng, n));
                if (k == edge.from) continue;
                Eigen::Index ki = static_cast<Eigen::Index>(k);
                Eigen::RowVectorXd rdiff = coords.row(i) - coords.row(ki);
                double rd_sq = rdiff.squaredNorm();
                double grad_coeff =
                    2.0 * b / ((0.001 + rd_sq) * (1.0 + a * std::pow(rd_sq, b)));
                for (int c = 0; c < dims; ++c) {
                    coords(i, c) += clip(grad_coeff * rdiff(c)) * alpha;
                }
            }
        }
    }

    result.coords = from_eigen(coords);
    return result;
}

ReducedMatrix reduce_embeddings(const RowMatrix& unit_rows,
                                const std::vector<std::string>& row_ids, double variance_target,
                                int final_dims, std::uint64_t seed) {
    if (unit_rows.rows != row_ids.size()) {
        throw PreconditionError("row_ids size must match embedding rows");
    }
    PcaResult pca = pca_fit_transform(unit_rows, variance_target);
    NeighborEmbedResult embedded = neighbor_embed(pca.projected, final_dims, seed);

    ReducedMatrix out;
    out.row_ids = row_ids;
    out.pca_dims = pca.dims;
    out.final_dims = final_dims;
    out.coords = std::move(embedded.coords);
    out.explained_variance = pca.explained;
    out.seed = seed;
    out.used_fallback = embedded.used_fallback;
    return out;
}

std::vector<Merge> agglomerative_merges(const RowMatrix& coords, std::size_t stop_count,
                                        std::vector<std::vector<int>>* final_members) {
    const std::size_t n = coords.rows;
    if (n == 0) {
        throw PreconditionError("clustering requires at least one row");
    }
    std::vector<Merge> merges;

    // Cluster state, keyed by rep = smallest member row index.
    std::vector<bool> active(n, true);
    std::vector<std::size_t> size(n, 1);
    std::vector<std::vector<int>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {static_cast<int>(i)};

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = euclidean(coords, i, j);

    // Per-cluster best partner; exact for average linkage since merged
    // distances never drop below the pre-merge minimum.
    struct Best {
        double d = std::numeric_limits<double>::infinity();
        std::size_t partner = 0;
    };
    std::vector<Best> best(n);
    auto recompute_best = [&](std::size_t i) {
        Best b;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            if (dist[i][j] < b.d || (dist[i][j] == b.d && j < b.partner)) {
                b.d = dist[i][j];
                b.partner = j;
            }
        }
        best[i] = b;
    };
    for (std::size_t i = 0; i < n; ++i) recompute_best(i);

    std::size_t active_count = n;
    while (active_count > std::max<std::size_t>(stop_count, 1)) {
        // Global minimum over canonical (smaller rep, larger rep) pairs.
        double min_d = std::numeric_limits<double>::infinity();
        std::size_t pa = 0, pb = 0;
        bool found = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            std::size_t lo = std::min(i, best[i].partner);
            std::size_t hi = std::max(i, best[i].partner);
            if (!found || best[i].d < min_d ||
                (best[i].d == min_d && (lo < pa || (lo == pa && hi < pb)))) {
                min_d = best[i].d;
                pa = lo;
                pb = hi;
                found = true;
            }
        }

        merges.push_back(Merge{static_cast<int>(pa), static_cast<int>(pb), min_d});

        // Merge pb into pa (pa keeps the smaller rep). Lance-Williams average
        // linkage update.
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == pa || k == pb) continue;
            double updated = (static_cast<double>(size[pa]) * dist[pa][k] +
                              static_cast<double>(size[pb]) * dist[pb][k]) /
                             static_cast<double>(size[pa] + size[pb]);
            dist[pa][k] = dist[k][pa] = updated;
        }
        size[pa] += size[pb];
        members[pa].insert(members[pa].end(), members[pb].begin(), members[pb].end());
        active[pb] = false;
        --active_count;

        recompute_best(pa);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == pa) continue;
            if (best[k].partner == pa || best[k].partner == pb) recompute_best(k);
        }
    }

    if (final_members) {
        final_members->clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            std::sort(members[i].begin(), members[i].end());
            final_members->push_back(members[i]);
        }
        std::sort(final_members->begin(), final_members->end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }
    return merges;
}

std::vector<Cluster> agglomerative_cluster(const RowMatrix& coords,
                                           const std::vector<std::string>& row_ids,
                                           int target_cluster_size) {
    if (coords.rows != row_ids.size()) {
        throw PreconditionError("row_ids size must match coords rows");
    }
    if (target_cluster_size < 1) {
        throw PreconditionError("target cluster size must be >= 1");
    }
    std::size_t stop =
        (coords.rows + static_cast<std::size_t>(target_cluster_size) - 1) /
        static_cast<std::size_t>(target_cluster_size);

    std::vector<std::vector<int>> members;
    agglomerative_merges(coords, stop, &members);

    std::vector<Cluster> clusters;
    clusters.reserve(members.size());
    int next_id = 1;
    for (const auto& m : members) {
        Cluster c;
        c.id = next_id++;
        for (int row : m) c.member_ids.push_back(row_ids[static_cast<std::size_t>(row)]);
        clusters.push_back(std::move(c));
    }
    return clusters;
}

void CodeIndex::insert(const std::string& label, const EmbeddingVector& vec) {
    if (contains(label)) {
        throw PreconditionError("code index already contains label: " + label);
    }
    entries_.emplace_back(label, normalize(vec));
}

bool CodeIndex::contains(const std::string& label) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == label; });
}

std::vector<std::pair<std::string, double>> knn_codes(const EmbeddingVector& query,
                                                      const CodeIndex& index, int k) {
    if (index.size() == 0) {
        throw PreconditionError("knn over an empty code index");
    }
    if (k < 1) {
        throw PreconditionError("knn requires k >= 1");
    }
    EmbeddingVector q = normalize(query);
    if (q.values.size() != index.entries().front().second.values.size()) {
        throw PreconditionError("knn query dims do not match index dims");
    }

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(index.size());
    for (std::size_t i = 0; i < index.entries().size(); ++i) {
        const auto& [label, vec] = index.entries()[i];
        double dot = 0.0;
        for (std::size_t d = 0; d < q.values.size(); ++d) dot += q.values[d] * vec.values[d];
        scored.emplace_back(dot, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    std::vector<std::pair<std::string, double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.emplace_back(index.entries()[scored[i].second].first, scored[i].first);
    }
    return out;
}

}  // namespace qcoder
