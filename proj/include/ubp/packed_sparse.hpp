#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ubp/selection.hpp"
#include "ubp/tensor.hpp"

namespace ubp {

enum class Dataflow : std::uint32_t {
    aligned = 0,         // ABP: start rows are multiples of n
    unaligned_naive = 1, // block data in natural channel order
    unaligned_wros = 2,  // channel i stored at slot (i mod n) within its block
};

const char* dataflow_name(Dataflow d);

/// Unaligned block-compressed weights. indptr is indexed by block start row
/// (length c_out+1; structurally-empty tail rows stay empty). The aligned
/// variant indexes aligned rows instead (length c_out/n + 1). indices hold the
/// input-channel of each block, ascending within a row; data holds n*kh*kw
/// values per block with kernel elements contiguous per channel slot.
struct PackedSparse {
    int c_out = 0;
    int c_in = 0;
    int kh = 0;
    int kw = 0;
    int n = 0;
    Dataflow dataflow = Dataflow::unaligned_naive;
    std::vector<std::uint32_t> indptr;
    std::vector<std::uint32_t> indices;
    std::vector<float> data;

    std::size_t block_count() const { return indices.size(); }
    int block_elems() const { return n * kh * kw; }
    std::size_t indptr_rows() const {
        return dataflow == Dataflow::aligned ? static_cast<std::size_t>(c_out / n)
                                             : static_cast<std::size_t>(c_out);
    }
    /// Start row of the row-index r used by indptr.
    int row_start(std::size_t r) const {
        return dataflow == Dataflow::aligned ? static_cast<int>(r) * n : static_cast<int>(r);
    }
};

/// Pack the masked tensor. Pure data permutation; densify(pack(w, sel, t))
/// reproduces w under the selection mask bit-exactly for every tag.
PackedSparse pack(const WeightTensor& w, const BlockSelection& sel, Dataflow dataflow);

/// Exact inverse of pack composed with mask application (un-rotates wros).
WeightTensor densify(const PackedSparse& p);

/// Every PackedSparse invariant, reported as human-readable violations
/// (empty result = valid).
std::vector<std::string> validate(const PackedSparse& p);

/// .ubps container: magic "UBPS", version u32=1, dims u32*4, n u32,
/// dataflow u32, block count u32, indptr u32s, indices u32s, data f32s,
/// all little-endian.
void store_packed(const PackedSparse& p, const std::string& path);
PackedSparse load_packed(const std::string& path);

} // namespace ubp
