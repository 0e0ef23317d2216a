#ifndef QHYDRO_BLOCK_MATRIX_HPP
#define QHYDRO_BLOCK_MATRIX_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#ifndef lapack_complex_double
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "errors.hpp"

namespace qhydro {

using Complex = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<Complex>;
using DenseOp = Eigen::MatrixXcd;

/// Partition of the basis {0..dim-1} into blocks. Operators that conserve
/// particle number are block diagonal in the particle-number partition.
struct Partition {
    std::vector<std::vector<std::uint32_t>> blocks;
    std::vector<std::uint32_t> block_of;
    std::vector<std::uint32_t> position;

    std::size_t dim() const { return block_of.size(); }
    std::size_t count() const { return blocks.size(); }

    static std::shared_ptr<const Partition> from_blocks(std::vector<std::vector<std::uint32_t>> blocks) {
        auto p = std::make_shared<Partition>();
        std::size_t dim = 0;
        for (const auto& b : blocks) dim += b.size();
        p->block_of.assign(dim, 0);
        p->position.assign(dim, 0);
        for (std::uint32_t k = 0; k < blocks.size(); ++k)
            for (std::uint32_t i = 0; i < blocks[k].size(); ++i) {
                p->block_of[blocks[k][i]] = k;
                p->position[blocks[k][i]] = i;
            }
        p->blocks = std::move(blocks);
        return p;
    }

    static std::shared_ptr<const Partition> full(std::size_t dim) {
        std::vector<std::uint32_t> all(dim);
        for (std::size_t i = 0; i < dim; ++i) all[i] = std::uint32_t(i);
        return from_blocks({std::move(all)});
    }

    friend bool operator==(const Partition& a, const Partition& b) { return a.blocks == b.blocks; }
};

using PartitionPtr = std::shared_ptr<const Partition>;

inline bool same_partition(const PartitionPtr& a, const PartitionPtr& b) {
    return a == b || *a == *b;
}

/// Dense blocks on the diagonal of a partitioned basis.
class BlockMatrix {
public:
    BlockMatrix() = default;
    explicit BlockMatrix(PartitionPtr part) : part_(std::move(part)) {
        blocks_.reserve(part_->count());
        for (const auto& b : part_->blocks) blocks_.push_back(DenseOp::Zero(b.size(), b.size()));
    }
    BlockMatrix(PartitionPtr part, std::vector<DenseOp> blocks) : part_(std::move(part)), blocks_(std::move(blocks)) {}

    static BlockMatrix identity(PartitionPtr part) {
        BlockMatrix m(std::move(part));
        for (auto& b : m.blocks_) b.setIdentity();
        return m;
    }

    /// Restricts a sparse operator to the blocks. Off-block entries larger
    /// than `tol` mean the operator does not respect the partition.
    static BlockMatrix from_sparse(const SparseOp& op, PartitionPtr part, double tol = 1e-12) {
        BlockMatrix m(part);
        for (int col = 0; col < op.outerSize(); ++col)
            for (SparseOp::InnerIterator it(op, col); it; ++it) {
                auto r = std::uint32_t(it.row()), c = std::uint32_t(it.col());
                if (part->block_of[r] != part->block_of[c]) {
                    if (std::abs(it.value()) > tol)
                        throw PreconditionError("operator couples different blocks of the partition");
                    continue;
                }
                m.blocks_[part->block_of[r]](part->position[r], part->position[c]) += it.value();
            }
        return m;
    }

    static BlockMatrix from_dense(const DenseOp& op, PartitionPtr part, double tol = 1e-12) {
        BlockMatrix m(part);
        for (std::size_t k = 0; k < part->count(); ++k) {
            const auto& idx = part->blocks[k];
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < idx.size(); ++j) m.blocks_[k](i, j) = op(idx[i], idx[j]);
        }
        // everything outside the blocks must vanish
        double outside = 0;
        for (Eigen::Index i = 0; i < op.rows(); ++i)
            for (Eigen::Index j = 0; j < op.cols(); ++j)
                if (part->block_of[i] != part->block_of[j]) outside = std::max(outside, std::abs(op(i, j)));
        if (outside > tol) throw PreconditionError("dense operator couples different blocks of the partition");
        return m;
    }

    const PartitionPtr& partition() const { return part_; }
    std::size_t dim() const { return part_ ? part_->dim() : 0; }
    std::size_t count() const { return blocks_.size(); }
    DenseOp& block(std::size_t k) { return blocks_[k]; }
    const DenseOp& block(std::size_t k) const { return blocks_[k]; }
    const std::vector<DenseOp>& blocks() const { return blocks_; }

    Complex operator()(std::size_t i, std::size_t j) const {
        if (part_->block_of[i] != part_->block_of[j]) return 0.0;
        return blocks_[part_->block_of[i]](part_->position[i], part_->position[j]);
    }

    DenseOp to_dense() const {
        DenseOp d = DenseOp::Zero(dim(), dim());
        for (std::size_t k = 0; k < count(); ++k) {
            const auto& idx = part_->blocks[k];
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < idx.size(); ++j) d(idx[i], idx[j]) = blocks_[k](i, j);
        }
        return d;
    }

    BlockMatrix to_full() const {
        if (count() == 1 && part_->blocks[0].size() == dim()) {
            bool ordered = true;
            for (std::size_t i = 0; i < dim() && ordered; ++i) ordered = part_->blocks[0][i] == i;
            if (ordered) return *this;
        }
        return BlockMatrix(Partition::full(dim()), {to_dense()});
    }

    /// Re-expresses the matrix on another partition of the same basis.
    BlockMatrix regroup(const PartitionPtr& target, double tol = 1e-12) const {
        if (same_partition(part_, target)) return *this;
        return from_dense(to_dense(), target, tol);
    }

    Complex trace() const {
        Complex t = 0;
        for (const auto& b : blocks_) t += b.trace();
        return t;
    }

    /// Tr(this * op) for a sparse operator in the original basis.
    Complex trace_product(const SparseOp& op) const {
        Complex t = 0;
        for (int col = 0; col < op.outerSize(); ++col)
            for (SparseOp::InnerIterator it(op, col); it; ++it) {
                auto r = std::uint32_t(it.row()), c = std::uint32_t(it.col());
                auto k = part_->block_of[r];
                if (k != part_->block_of[c]) continue;
                // (this)_{c r} * op_{r c}
                t += blocks_[k](part_->position[c], part_->position[r]) * it.value();
            }
        return t;
    }

    Complex trace_product(const BlockMatrix& o) const {
        check_same(o);
        Complex t = 0;
        for (std::size_t k = 0; k < count(); ++k) t += (blocks_[k].transpose().array() * o.blocks_[k].array()).sum();
        return t;
    }

    BlockMatrix adjoint() const {
        BlockMatrix m(part_);
        for (std::size_t k = 0; k < count(); ++k) m.blocks_[k] = blocks_[k].adjoint();
        return m;
    }

    BlockMatrix& operator+=(const BlockMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < count(); ++k) blocks_[k] += o.blocks_[k];
        return *this;
    }
    BlockMatrix& operator-=(const BlockMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < count(); ++k) blocks_[k] -= o.blocks_[k];
        return *this;
    }
    BlockMatrix& operator*=(Complex s) {
        for (auto& b : blocks_) b *= s;
        return *this;
    }
    friend BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }
    friend BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b) { return a -= b; }
    friend BlockMatrix operator*(Complex s, BlockMatrix a) { return a *= s; }
    friend BlockMatrix operator*(const BlockMatrix& a, const BlockMatrix& b) {
        a.check_same(b);
        BlockMatrix m(a.part_);
        for (std::size_t k = 0; k < a.count(); ++k) m.blocks_[k].noalias() = a.blocks_[k] * b.blocks_[k];
        return m;
    }

    double max_abs() const {
        double m = 0;
        for (const auto& b : blocks_)
            if (b.size()) m = std::max(m, b.cwiseAbs().maxCoeff());
        return m;
    }

    double hermiticity_defect() const {
        double m = 0;
        for (const auto& b : blocks_)
            if (b.size()) m = std::max(m, (b - b.adjoint()).cwiseAbs().maxCoeff());
        return m;
    }

private:
    void check_same(const BlockMatrix& o) const {
        if (!same_partition(part_, o.part_)) throw PreconditionError("block matrices live on different partitions");
    }

    PartitionPtr part_;
    std::vector<DenseOp> blocks_;
};

inline BlockMatrix commutator(const BlockMatrix& a, const BlockMatrix& b) { return a * b - b * a; }

/// Eigendecomposition of a hermitian block matrix, block by block.
struct BlockSpectrum {
    PartitionPtr partition;
    std::vector<Eigen::VectorXd> values;
    std::vector<DenseOp> vectors; // empty when only eigenvalues were requested

    double max_value() const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& v : values)
            if (v.size()) m = std::max(m, v.maxCoeff());
        return m;
    }
    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& v : values)
            if (v.size()) m = std::min(m, v.minCoeff());
        return m;
    }

    std::vector<double> all_values() const {
        std::vector<double> out;
        for (const auto& v : values) out.insert(out.end(), v.data(), v.data() + v.size());
        std::sort(out.begin(), out.end());
        return out;
    }

    /// V f(D) V^+ blockwise.
    BlockMatrix apply(const std::function<double(double)>& f) const {
        if (vectors.empty()) throw PreconditionError("spectrum was computed without eigenvectors");
        BlockMatrix m(partition);
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (values[k].size() == 0) continue;
            Eigen::VectorXd fd = values[k].unaryExpr(f);
            m.block(k).noalias() = vectors[k] * fd.asDiagonal() * vectors[k].adjoint();
        }
        return m;
    }
};

inline BlockSpectrum eigh(const BlockMatrix& m, bool with_vectors = true) {
    BlockSpectrum s;
    s.partition = m.partition();
    s.values.resize(m.count());
    if (with_vectors) s.vectors.resize(m.count());
    for (std::size_t k = 0; k < m.count(); ++k) {
        const auto& b = m.block(k);
        if (b.rows() == 0) continue;
        if (b.rows() == 1) {
            s.values[k] = Eigen::VectorXd::Constant(1, b(0, 0).real());
            if (with_vectors) s.vectors[k] = DenseOp::Identity(1, 1);
            continue;
        }
        Eigen::VectorXd w(b.rows());
        const lapack_int n = lapack_int(b.rows());
        const char job = with_vectors ? 'V' : 'N';
        lapack_int info = 0;
        if (b.imag().cwiseAbs().maxCoeff() == 0.0) {
            // real symmetric block: the real solver is several times faster
            Eigen::MatrixXd work = b.real();
            info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, job, 'L', n, work.data(), n, w.data());
            if (with_vectors && info == 0) s.vectors[k] = work.cast<Complex>();
        } else {
            DenseOp work = b;
            info = LAPACKE_zheevd(LAPACK_COL_MAJOR, job, 'L', n, work.data(), n, w.data());
            if (with_vectors && info == 0) s.vectors[k] = std::move(work);
        }
        if (info != 0) throw ConvergenceError("hermitian eigensolver failed, info " + std::to_string(info), 0, 0);
        s.values[k] = std::move(w);
    }
    return s;
}

/// log Tr exp(K) without overflow, from the spectrum of K.
inline double log_trace_exp(const BlockSpectrum& s) {
    const double shift = s.max_value();
    double sum = 0;
    for (const auto& v : s.values)
        for (Eigen::Index i = 0; i < v.size(); ++i) sum += std::exp(v[i] - shift);
    return shift + std::log(sum);
}

/// Spectral norm of a hermitian or anti-hermitian block matrix.
inline double normal_norm(const BlockMatrix& m) {
    const bool anti = (m + m.adjoint()).max_abs() <= (m - m.adjoint()).max_abs();
    BlockMatrix h = anti ? Complex(0, 1) * m : m;
    auto s = eigh(h, false);
    return std::max(std::abs(s.max_value()), std::abs(s.min_value()));
}

inline double max_abs(const SparseOp& op) {
    double m = 0;
    for (int col = 0; col < op.outerSize(); ++col)
        for (SparseOp::InnerIterator it(op, col); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

} // namespace qhydro

#endif
