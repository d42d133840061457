#pragma once

#include "coke/kernels.hpp"

namespace coke::kernels::detail {

extern const Table kScalarTable;

#if defined(COKE_HAVE_AVX2)
extern const Table kAvx2Table;
#endif

}  // namespace coke::kernels::detail
