// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_OPS_H_
#define MULAN_NN_OPS_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "mulan/nn/tape.h"

// Differentiable primitives. Matrix ops take rank-2 values (rank 1 counts as
// one row); shape mismatches throw GraphError, non-finite results throw
// NumericError.
namespace mulan::nn {

Var matmul(Var a, Var b);                 // [m,k] x [k,n]
Var linear(Var x, Var weight, Var bias);  // x W + b, W [k,n], b [n]
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                    // elementwise
Var add_row(Var x, Var bias);             // bias [n] broadcast over rows
Var scale(Var x, double factor);
Var sum(Var x);                           // -> scalar
Var mean_rows(Var x);                     // [m,n] -> [1,n]
Var log(Var x);
Var exp(Var x);
Var gelu(Var x);                          // exact erf form
Var softmax(Var x);                       // row-wise
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);  // row-wise
// Row-wise l2 normalisation. A zero row maps to zero and is noted in the
// tape diagnostics.
Var l2_normalize(Var x);
Var embedding(Var table, std::span<const int> ids);  // -> [ids.size(), n]
Var concat_rows(Var top, Var bottom);
Var take_row(Var x, std::size_t row);     // -> [1,n]
Var pick(Var x, std::size_t flat_index);  // -> scalar

// Multi-head scaled dot-product self-attention over a fused projection
// qkv = [L, 3H] laid out as [Q | K | V]. Keys whose mask entry is 0 receive
// no attention weight; an empty mask means every key is valid. Returns [L, H].
Var masked_attention(Var qkv, std::size_t heads, std::span<const std::uint8_t> key_mask = {});

}  // namespace mulan::nn

#endif  // MULAN_NN_OPS_H_
