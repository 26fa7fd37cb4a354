// Data-parallel kernels for the log-likelihood hot path.
//
// The posterior-mean estimators and the Monte Carlo tables evaluate
//
//   sum_i [ -theta d_i - 2 log B_i ],
//   B_i = -expm1(-theta (1 - m_i)) + e^{-theta d_i} (-expm1(-theta m_i)),
//
// over millions of (observation, grid-node) combinations, where
// m_i = min(u_i, v_i) and d_i = |u_i - v_i| are precomputed per sample.
// Two implementations are provided: a scalar reference using libm, and an
// AVX2+FMA variant with vectorized exp/log.  The active backend is chosen
// once at startup from CPUID, overridable with FRANK_KERNELS=scalar|avx2.
//
// Contract: theta >= frank::kThetaEps (callers handle theta <= 0 via the
// reflection identity and small theta via series branches); all m_i in (0,1),
// d_i in [0,1).  Backends agree to ~1e-12 relative; each backend is
// individually deterministic (fixed accumulation order, no FP reassociation
// across calls).
#pragma once

#include <cstddef>

namespace frank::kernels {

struct Backend {
  const char* name;
  // Returns sum_i [ -theta*d[i] - 2*log(B_i) ] over i < n.
  double (*accum)(const double* m, const double* d, std::size_t n, double theta);
};

// Backend selected at first use (CPUID + FRANK_KERNELS override).
const Backend& backend();

// Always available; the equivalence reference.
const Backend& scalar_backend();

// nullptr when AVX2+FMA is unavailable (at build or run time).
const Backend* avx2_backend();

// Test hooks for the vectorized transcendentals: evaluate on a 4-lane
// buffer.  Return false (leaving out untouched) when AVX2 is unavailable.
bool avx2_exp4(const double in[4], double out[4]);
bool avx2_log4(const double in[4], double out[4]);

}  // namespace frank::kernels
