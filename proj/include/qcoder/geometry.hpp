#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qcoder/domain.hpp"

namespace qcoder {

// Dense row-major matrix; small enough a type to keep Eigen out of the
// public surface.
struct RowMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RowMatrix() = default;
    RowMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Unit-normalize; zero vectors are an error.
std::vector<double> normalize(const std::vector<double>& v);
EmbeddingVector normalize(const EmbeddingVector& v);

// dot(a,b) / (|a||b|). Equal dims required; zero vectors are undefined.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct PcaResult {
    int dims = 0;             // D: minimal component count reaching the target
    RowMatrix projected;      // rows x D, principal components in descending eigenvalue order
    double explained = 0.0;   // cumulative explained variance at D
};

// Mean-centers internally; D is the smallest component count whose cumulative
// explained variance reaches `target`. All-identical rows are degenerate.
PcaResult pca_fit_transform(const RowMatrix& matrix, double target);

struct NeighborEmbedResult {
    RowMatrix coords;          // rows x dims
    bool used_fallback = false;  // true when rows < dims + 2 forced PCA truncation
    int n_neighbors = 0;
    int epochs = 0;
};

// k-nearest-neighbor-graph manifold embedding (fuzzy neighbor graph + SGD
// layout), deterministic for fixed (input, dims, seed). Inputs with fewer
// than dims + 2 rows fall back to truncating the input columns.
NeighborEmbedResult neighbor_embed(const RowMatrix& input, int dims, std::uint64_t seed);

struct Merge {
    int a = 0;  // cluster reps = smallest member row index, a < b
    int b = 0;
    double distance = 0.0;

    bool operator==(const Merge&) const = default;
};

// A reduced semantic space: PCA to the variance-target dimension count, then
// the neighbor embedding down to final_dims.
struct ReducedMatrix {
    std::vector<std::string> row_ids;
    int pca_dims = 0;
    int final_dims = 0;
    RowMatrix coords;                // row_ids.size() x final_dims
    double explained_variance = 0.0;  // >= the configured variance target
    std::uint64_t seed = 0;
    bool used_fallback = false;
};

// Full reduction pipeline over unit-normalized embedding rows.
ReducedMatrix reduce_embeddings(const RowMatrix& unit_rows,
                                const std::vector<std::string>& row_ids, double variance_target,
                                int final_dims, std::uint64_t seed);

// Bottom-up average-linkage merging with Euclidean distance, stopping at
// stop_count clusters. Ties break on the lexicographically smallest rep pair.
// final_members, when non-null, receives each surviving cluster's row
// indices (ascending), clusters ordered by smallest row index.
std::vector<Merge> agglomerative_merges(const RowMatrix& coords, std::size_t stop_count,
                                        std::vector<std::vector<int>>* final_members = nullptr);

// Stop rule: ceil(rows / target_cluster_size) clusters. Cluster ids are
// 1-based, assigned in ascending order of each cluster's smallest row index.
std::vector<Cluster> agglomerative_cluster(const RowMatrix& coords,
                                           const std::vector<std::string>& row_ids,
                                           int target_cluster_size);

// Exact k-NN over unit-normalized code embeddings; insertion order preserved
// and used for tie-breaking. Corpus sizes here make brute-force scan exact
// and fast enough.
class CodeIndex {
  public:
    // Normalizes the vector. Duplicate labels are a precondition error.
    void insert(const std::string& label, const EmbeddingVector& vec);

    bool contains(const std::string& label) const;
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, EmbeddingVector>>& entries() const {
        return entries_;
    }

  private:
    std::vector<std::pair<std::string, EmbeddingVector>> entries_;
};

// min(k, index size) results by descending cosine similarity; ties keep
// earlier insertion first.
std::vector<std::pair<std::string, double>> knn_codes(const EmbeddingVector& query,
                                                      const CodeIndex& index, int k);

}  // namespace qcoder
