#pragma once

#include <algorithm>

namespace adex::nn::detail {

// C (MxN) += A (MxK) * B (KxN), row-major. Register-tiled 4x32 fast path;
// generic tails. N values in the conv stack are multiples of 32, so the
// fast path dominates.
template <class S>
void gemm_acc(long M, long N, long K, const S* A, const S* B, S* C) {
    constexpr long MR = 4, NR = 32;
    for (long m0 = 0; m0 < M; m0 += MR) {
        const long mb = std::min(MR, M - m0);
        for (long n0 = 0; n0 < N; n0 += NR) {
            const long nb = std::min(NR, N - n0);
            if (mb == MR && nb == NR) {
                S acc0[NR] = {}, acc1[NR] = {}, acc2[NR] = {}, acc3[NR] = {};
                const S* a0 = A + (m0 + 0) * K;
                const S* a1 = A + (m0 + 1) * K;
                const S* a2 = A + (m0 + 2) * K;
                const S* a3 = A + (m0 + 3) * K;
                const S* b = B + n0;
                for (long k = 0; k < K; ++k, b += N) {
                    const S w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
                    for (long j = 0; j < NR; ++j) {
                        const S bv = b[j];
                        acc0[j] += w0 * bv;
                        acc1[j] += w1 * bv;
                        acc2[j] += w2 * bv;
                        acc3[j] += w3 * bv;
                    }
                }
                S* c0 = C + (m0 + 0) * N + n0;
                S* c1 = C + (m0 + 1) * N + n0;
                S* c2 = C + (m0 + 2) * N + n0;
                S* c3 = C + (m0 + 3) * N + n0;
                for (long j = 0; j < NR; ++j) {
                    c0[j] += acc0[j];
                    c1[j] += acc1[j];
                    c2[j] += acc2[j];
                    c3[j] += acc3[j];
                }
            } else {
                for (long m = m0; m < m0 + mb; ++m) {
                    const S* a = A + m * K;
                    S* c = C + m * N + n0;
                    for (long k = 0; k < K; ++k) {
                        const S w = a[k];
                        const S* b = B + k * N + n0;
                        for (long j = 0; j < nb; ++j) c[j] += w * b[j];
                    }
                }
            }
        }
    }
}

}  // namespace adex::nn::detail
